#include "clcoach/imagination.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "clcoach/error.hpp"
#include "clcoach/kernels.hpp"

namespace clcoach {

void GridSpec::validate() const {
    if (levels.empty()) throw ParameterError("grid needs at least one level");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!std::isfinite(levels[i]) || std::abs(levels[i]) > kImaginationCap) {
            throw ParameterError("grid level outside the imagination cap");
        }
        if (i > 0 && !(levels[i] > levels[i - 1])) throw ParameterError("grid levels must be strictly ascending");
    }
}

std::vector<AffectPoint> grid_targets(const GridSpec& spec) {
    spec.validate();
    std::vector<AffectPoint> out;
    out.reserve(spec.levels.size() * spec.levels.size());
    for (double v : spec.levels) {
        for (double a : spec.levels) out.emplace_back(v, a);
    }
    return out;
}

FeatureVector NullGenerator::imagine(const FeatureVector& seed, const AffectPoint&) const { return seed; }

ExpressionGenerator::ExpressionGenerator(ExpressionModel model, double noise_sigma, std::uint64_t seed)
    : model_(std::move(model)), noise_sigma_(noise_sigma), seed_(seed) {
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ParameterError("generator noise must be >= 0");
}

FeatureVector ExpressionGenerator::imagine(const FeatureVector& seed, const AffectPoint& target) const {
    const Eigen::Vector3d z = model_.decode(seed);
    const Eigen::Vector3d shift(target.valence() - z(0), target.arousal() - z(1), 0.0);
    const Eigen::VectorXd delta = model_.map() * shift;

    // Noise stream keyed by (generator seed, seed vector, target).
    std::uint64_t h = seed_;
    for (double x : seed.values()) h = mix_seed(h, std::bit_cast<std::uint64_t>(x));
    h = mix_seed(h, std::bit_cast<std::uint64_t>(target.valence()));
    h = mix_seed(h, std::bit_cast<std::uint64_t>(target.arousal()));
    std::mt19937_64 rng(h);
    std::normal_distribution<double> noise(0.0, noise_sigma_ > 0.0 ? noise_sigma_ : 1.0);

    std::vector<double> out(seed.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = seed[i] + delta(static_cast<Eigen::Index>(i));
        if (noise_sigma_ > 0.0) out[i] += noise(rng);
    }
    return FeatureVector(std::move(out));
}

std::unique_ptr<Generator> make_generator(std::string_view name, const GeneratorConfig& config) {
    if (name == "null") return std::make_unique<NullGenerator>();
    if (name == "synthetic") {
        const auto model = config.model.dim() == 0 ? ExpressionModel::canonical() : config.model;
        return std::make_unique<ExpressionGenerator>(model, config.noise_sigma, config.seed);
    }
    throw ParameterError("unknown generator '" + std::string(name) + "'");
}

std::vector<std::string> generator_names() { return {"null", "synthetic"}; }

std::vector<LabelledSample> sample_frames(std::span<const LabelledSample> frames, std::size_t n,
                                          std::uint64_t rng_seed) {
    if (frames.empty()) throw EmptyInputError("no frames to sample from");
    if (n >= frames.size()) return {frames.begin(), frames.end()};
    std::vector<std::size_t> idx(frames.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(rng_seed);
    // Partial Fisher-Yates: the first n slots become the sample.
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    std::vector<LabelledSample> out;
    out.reserve(n);
    for (std::size_t i : idx) out.push_back(frames[i]);
    return out;
}

namespace {

struct Failure {
    std::size_t seed_index = 0;
    std::size_t target_index = 0;
    std::string what;
};

[[noreturn]] void raise(const Failure& f, const std::vector<AffectPoint>& targets) {
    std::ostringstream msg;
    msg << "generator failed for seed " << f.seed_index << " at target (" << targets[f.target_index].valence() << ", "
        << targets[f.target_index].arousal() << "): " << f.what;
    throw GeneratorError(msg.str());
}

// Fills the imagined block of one original; returns a failure instead of
// throwing so it can run inside a parallel region.
std::optional<Failure> imagine_block(const LabelledSample& original, std::size_t i, const Generator& gen,
                                     const std::vector<AffectPoint>& targets, LabelledSample* out) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
        try {
            FeatureVector f = gen.imagine(original.features, targets[t]);
            if (f.dim() != original.features.dim()) {
                return Failure{i, t, "output dimension " + std::to_string(f.dim()) + " != seed dimension"};
            }
            out[t] = LabelledSample{std::move(f), targets[t]};
        } catch (const std::exception& e) {
            return Failure{i, t, e.what()};
        }
    }
    return std::nullopt;
}

void check_originals(std::span<const LabelledSample> originals) {
    if (originals.empty()) throw EmptyInputError("augment needs at least one original");
}

}  // namespace

std::vector<LabelledSample> augment_serial(std::span<const LabelledSample> originals, const Generator& gen,
                                           const GridSpec& spec) {
    check_originals(originals);
    const auto targets = grid_targets(spec);
    std::vector<LabelledSample> out(originals.begin(), originals.end());
    out.resize(originals.size() * (targets.size() + 1));
    for (std::size_t i = 0; i < originals.size(); ++i) {
        auto* block = out.data() + originals.size() + i * targets.size();
        if (auto f = imagine_block(originals[i], i, gen, targets, block)) raise(*f, targets);
    }
    return out;
}

std::vector<LabelledSample> augment_parallel(std::span<const LabelledSample> originals, const Generator& gen,
                                             const GridSpec& spec) {
    check_originals(originals);
    const auto targets = grid_targets(spec);
    std::vector<LabelledSample> out(originals.begin(), originals.end());
    out.resize(originals.size() * (targets.size() + 1));
    std::vector<std::optional<Failure>> failures(originals.size());
    const auto n = static_cast<std::ptrdiff_t>(originals.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < n; ++si) {
        const auto i = static_cast<std::size_t>(si);
        failures[i] = imagine_block(originals[i], i, gen, targets, out.data() + originals.size() + i * targets.size());
    }
    for (const auto& f : failures) {
        if (f) raise(*f, targets);
    }
    return out;
}

std::vector<LabelledSample> augment(std::span<const LabelledSample> originals, const Generator& gen,
                                    const GridSpec& spec, Exec exec) {
    const bool parallel = exec == Exec::Parallel || (exec == Exec::Auto && kernels::max_threads() > 1);
    return parallel ? augment_parallel(originals, gen, spec) : augment_serial(originals, gen, spec);
}

}  // namespace clcoach
