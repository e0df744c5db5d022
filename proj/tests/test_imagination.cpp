#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"

#include "clcoach/error.hpp"
#include "clcoach/imagination.hpp"
#include "clcoach/persona.hpp"

using namespace clcoach;

namespace {

std::vector<LabelledSample> frames_of(const ExpressionModel& m, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    std::vector<LabelledSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        const AffectPoint p(u(rng), u(rng));
        out.push_back({m.express(p, 0.05, &rng), p});
    }
    return out;
}

class FailingGenerator final : public Generator {
public:
    std::string_view name() const noexcept override { return "failing"; }
    FeatureVector imagine(const FeatureVector& seed, const AffectPoint& target) const override {
        if (target.valence() > 0.6 && target.arousal() < -0.6) throw std::runtime_error("boom");
        return seed;
    }
};

}  // namespace

TEST_CASE("the grid has 49 targets capped at 0.75, valence-major") {
    const auto g = grid_targets();
    REQUIRE(g.size() == 49);
    double max_abs = 0.0;
    for (const auto& p : g) max_abs = std::max({max_abs, std::abs(p.valence()), std::abs(p.arousal())});
    CHECK(max_abs == 0.75);
    CHECK(g.front() == AffectPoint(-0.75, -0.75));
    CHECK(g[1] == AffectPoint(-0.75, -0.5));
    CHECK(g[7] == AffectPoint(-0.5, -0.75));
    CHECK(g.back() == AffectPoint(0.75, 0.75));
    std::set<std::pair<double, double>> distinct;
    for (const auto& p : g) distinct.insert({p.valence(), p.arousal()});
    CHECK(distinct.size() == 49);
}

TEST_CASE("grid specs are validated") {
    const GridSpec too_wide{{-0.8, 0.0, 0.8}}, repeated{{0.0, 0.0}}, descending{{0.5, 0.0}}, empty{{}};
    CHECK_THROWS_AS(too_wide.validate(), ParameterError);
    CHECK_THROWS_AS(repeated.validate(), ParameterError);
    CHECK_THROWS_AS(descending.validate(), ParameterError);
    CHECK_THROWS_AS(empty.validate(), ParameterError);
    const GridSpec corners{{-0.5, 0.5}};
    CHECK(grid_targets(corners).size() == 4);
}

TEST_CASE("sampling picks distinct frames in original order") {
    const auto frames = frames_of(ExpressionModel::canonical(), 300, 1);
    const auto s = sample_frames(frames, 10, 42);
    REQUIRE(s.size() == 10);
    std::vector<std::size_t> idx;
    for (const auto& f : s) {
        const auto it = std::find_if(frames.begin(), frames.end(),
                                     [&](const LabelledSample& x) { return x.features == f.features; });
        REQUIRE(it != frames.end());
        idx.push_back(static_cast<std::size_t>(it - frames.begin()));
    }
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());

    const auto again = sample_frames(frames, 10, 42);
    CHECK(std::equal(s.begin(), s.end(), again.begin(),
                     [](const auto& a, const auto& b) { return a.features == b.features; }));
    const auto few = frames_of(ExpressionModel::canonical(), 4, 2);
    CHECK(sample_frames(few, 10, 1).size() == 4);
    CHECK_THROWS_AS(sample_frames({}, 10, 1), EmptyInputError);
}

TEST_CASE("ten originals become exactly 500 training vectors") {
    const auto m = ExpressionModel::canonical();
    const auto frames = frames_of(m, 200, 3);
    const auto originals = sample_frames(frames, kSampledFrames, 4);
    const ExpressionGenerator gen(m, 0.02, 5);
    const auto out = augment(originals, gen);
    REQUIRE(out.size() == 500);
    const auto grid = grid_targets();
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(out[i].features == originals[i].features);
        CHECK(out[i].label == originals[i].label);
    }
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t g = 0; g < 49; ++g) REQUIRE(out[10 + i * 49 + g].label == grid[g]);
    }
}

TEST_CASE("parallel augmentation equals the serial reference") {
    const auto m = ExpressionModel::canonical();
    const auto originals = frames_of(m, 10, 6);
    const ExpressionGenerator gen(m, 0.02, 7);
    const auto a = augment_serial(originals, gen);
    const auto b = augment_parallel(originals, gen);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].features == b[i].features);
        REQUIRE(a[i].label == b[i].label);
    }
}

TEST_CASE("generator failures name the seed and target") {
    const auto originals = frames_of(ExpressionModel::canonical(), 3, 8);
    const FailingGenerator gen;
    for (const auto exec : {Exec::Serial, Exec::Parallel}) {
        try {
            augment(originals, gen, {}, exec);
            FAIL("expected a GeneratorError");
        } catch (const GeneratorError& e) {
            const std::string what = e.what();
            CHECK(what.find("seed 0") != std::string::npos);
            CHECK(what.find("0.75") != std::string::npos);
        }
    }
}

TEST_CASE("imagined frames read back as their targets through the owner's map") {
    PersonaSpec spec;
    spec.id = "probe";
    spec.annotator_bias = AffectPoint(-0.4, 0.3);
    spec.responses[SessionState::Impactful] = {AffectPoint(0.3, 0.3), 0.1};
    const auto persona = build_persona(spec);
    const double sigma = 0.02;
    const ExpressionGenerator gen(persona.expression, sigma, 9);
    std::mt19937_64 rng(10);
    for (int i = 0; i < 20; ++i) {
        const auto seed = persona.expression.express(AffectPoint(0.2, -0.1), 0.05, &rng);
        for (const auto& t : grid_targets()) {
            const auto back = persona.expression.read_affect(gen.imagine(seed, t));
            // read-out noise of a D-dimensional isotropic perturbation is tiny
            REQUIRE(std::abs(back.valence() - t.valence()) < 0.05);
            REQUIRE(std::abs(back.arousal() - t.arousal()) < 0.05);
        }
    }
}

TEST_CASE("generator registry") {
    const auto names = generator_names();
    CHECK(std::find(names.begin(), names.end(), "synthetic") != names.end());
    CHECK(std::find(names.begin(), names.end(), "null") != names.end());
    GeneratorConfig cfg{ExpressionModel::canonical(), 0.02, 1};
    CHECK(make_generator("synthetic", cfg)->name() == "synthetic");
    const auto null = make_generator("null", cfg);
    const FeatureVector x(64, 0.5);
    CHECK(null->imagine(x, AffectPoint(0.5, 0.5)) == x);
    CHECK_THROWS_AS(make_generator("caae", cfg), ParameterError);
    CHECK_THROWS_AS(ExpressionGenerator(ExpressionModel::canonical(), -1.0, 0), ParameterError);
}

TEST_CASE("synthetic generator is deterministic") {
    const auto m = ExpressionModel::canonical();
    const ExpressionGenerator a(m, 0.02, 11), b(m, 0.02, 11), c(m, 0.02, 12);
    const auto x = m.express(AffectPoint(0.1, 0.1));
    CHECK(a.imagine(x, AffectPoint(0.5, -0.25)) == b.imagine(x, AffectPoint(0.5, -0.25)));
    CHECK_FALSE(a.imagine(x, AffectPoint(0.5, -0.25)) == c.imagine(x, AffectPoint(0.5, -0.25)));
}
