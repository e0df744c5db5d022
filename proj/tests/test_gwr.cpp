#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"

#include "clcoach/error.hpp"
#include "clcoach/gwr.hpp"
#include "clcoach/kernels.hpp"

using namespace clcoach;

namespace {

FeatureVector random_vector(std::mt19937_64& rng, std::size_t dim, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    std::vector<double> v(dim);
    for (auto& x : v) x = n(rng);
    return FeatureVector(std::move(v));
}

AffectPoint random_label(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return AffectPoint(u(rng), u(rng));
}

GammaGwrNetwork small_net(std::uint64_t seed, std::size_t dim = 6) {
    std::mt19937_64 rng(seed);
    return GammaGwrNetwork::create(GwrParams::episodic(), dim, random_vector(rng, dim), random_vector(rng, dim));
}

// Direct evaluation of the matching distance, independent of the kernels.
double direct_distance(const GammaGwrNetwork& net, std::size_t i, const FeatureVector& x) {
    const auto& n = net.neurons()[i];
    const auto& alpha = net.params().distance_weights;
    double d = 0.0;
    for (std::size_t c = 0; c < x.dim(); ++c) d += alpha[0] * (x[c] - n.weight[c]) * (x[c] - n.weight[c]);
    for (std::size_t k = 0; k < n.contexts.size(); ++k) {
        const auto& C = net.global_context()[k];
        for (std::size_t c = 0; c < x.dim(); ++c) {
            d += alpha[k + 1] * (C[c] - n.contexts[k][c]) * (C[c] - n.contexts[k][c]);
        }
    }
    return d;
}

}  // namespace

TEST_CASE("habituation decays monotonically towards its floor") {
    for (const double tau : {0.1, 0.3, 0.9}) {
        double h = 1.0;
        for (int i = 0; i < 200; ++i) {
            const double next = habituate(h, tau);
            REQUIRE(next <= h);
            REQUIRE(next >= 0.01);
            h = next;
        }
    }
    CHECK(habituate(1.0, 0.3) == doctest::Approx(0.7));
    CHECK(habituate(0.5, 0.3) == doctest::Approx(0.5 + 0.3 * 1.05 * 0.5 - 0.3));
}

TEST_CASE("parameters are validated") {
    CHECK_NOTHROW(GwrParams::episodic().validate());
    CHECK_NOTHROW(GwrParams::semantic().validate());
    auto p = GwrParams::episodic();
    p.insertion_threshold = 1.5;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = GwrParams::episodic();
    p.depth = -1;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = GwrParams::episodic();
    p.tau_bmu = 0.99;  // 1.05 * tau >= 1 would make habituation grow
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = GwrParams::episodic();
    p.distance_weights = {0.5, 0.5};
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = GwrParams::episodic();
    CHECK(p.distance_weights.size() == 3);
    CHECK(p.distance_weights[0] == doctest::Approx(4.0 / 7.0));
    CHECK(p.distance_weights[0] + p.distance_weights[1] + p.distance_weights[2] == doctest::Approx(1.0));
}

TEST_CASE("a fresh network has two unlabelled neurons and no edges") {
    const auto net = small_net(1);
    CHECK(net.size() == 2);
    CHECK(net.edges().empty());
    CHECK(net.labelled_count() == 0);
    CHECK(net.neurons()[0].uid == 0);
    CHECK(net.neurons()[1].uid == 1);
    CHECK_THROWS_AS(net.predict(FeatureVector(6)), NoLabelsError);
    CHECK_THROWS_AS(net.replay_trajectories(3, 5), EmptyInputError);
    CHECK_THROWS_AS(net.find_bmu(FeatureVector(5)), DimensionError);
    std::mt19937_64 rng(2);
    CHECK_THROWS_AS(GammaGwrNetwork::create(GwrParams::episodic(), 6, random_vector(rng, 6), random_vector(rng, 5)),
                    DimensionError);
}

TEST_CASE("bmu search agrees with a direct distance scan") {
    auto net = small_net(3);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 300; ++i) net.train_step(random_vector(rng, 6, 2.0), random_label(rng));
    for (int i = 0; i < 100; ++i) {
        const auto x = random_vector(rng, 6, 2.0);
        std::vector<double> d;
        for (std::size_t k = 0; k < net.size(); ++k) d.push_back(direct_distance(net, k, x));
        std::size_t best = 0;
        for (std::size_t k = 1; k < d.size(); ++k) {
            if (d[k] < d[best]) best = k;
        }
        const auto r = net.find_bmu(x);
        CHECK(r.bmu == best);
        CHECK(r.second != r.bmu);
        CHECK(r.distance == doctest::Approx(d[best]).epsilon(1e-12));
        CHECK(r.activation == doctest::Approx(std::exp(-d[best])));
    }
}

TEST_CASE("training laws hold step by step") {
    auto net = small_net(5, 8);
    std::mt19937_64 rng(6);
    std::size_t inserts = 0;
    for (int step = 0; step < 1000; ++step) {
        std::map<std::uint64_t, double> before;
        for (const auto& n : net.neurons()) before[n.uid] = n.habituation;
        const auto size_before = net.size();
        const auto x = random_vector(rng, 8, 1.5);
        const auto match = net.find_bmu(x);
        const double h_b = net.neurons()[match.bmu].habituation;
        const auto r = net.train_step(x, random_label(rng));

        // growth iff both thresholds are crossed
        const bool should_grow = match.activation < net.params().insertion_threshold &&
                                 h_b < net.params().habituation_threshold;
        REQUIRE(r.inserted == should_grow);
        REQUIRE(r.bmu_habituation == h_b);
        inserts += r.inserted;
        if (!r.inserted) REQUIRE(net.size() <= size_before);

        for (const auto& n : net.neurons()) {
            const auto it = before.find(n.uid);
            if (it != before.end()) REQUIRE(n.habituation <= it->second);
        }
        for (const auto& [key, age] : net.edges()) {
            REQUIRE(key.first < key.second);
            REQUIRE(key.second < net.size());
            REQUIRE(age <= net.params().max_edge_age);
        }
        REQUIRE(net.size() >= 2);
    }
    CHECK(inserts > 5);
    CHECK(net.steps() == 1000);
}

TEST_CASE("bmu-second edge is refreshed on every step") {
    auto net = small_net(7, 4);
    std::mt19937_64 rng(8);
    // Report indices are pre-pruning, so neurons are followed by uid.
    auto index_of = [&](std::uint64_t uid) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < net.size(); ++i) {
            if (net.neurons()[i].uid == uid) return i;
        }
        return std::nullopt;
    };
    for (int step = 0; step < 500; ++step) {
        const auto x = random_vector(rng, 4, 1.5);
        const auto match = net.find_bmu(x);
        const auto uid_b = net.neurons()[match.bmu].uid;
        const auto uid_s = net.neurons()[match.second].uid;
        std::set<std::uint64_t> before;
        for (const auto& n : net.neurons()) before.insert(n.uid);
        const auto r = net.train_step(x, random_label(rng));
        const auto b = index_of(uid_b);
        const auto s = index_of(uid_s);
        REQUIRE(b);
        REQUIRE(s);
        if (r.inserted) {
            std::optional<std::size_t> nr;
            for (std::size_t i = 0; i < net.size(); ++i) {
                if (!before.contains(net.neurons()[i].uid)) nr = i;
            }
            REQUIRE(nr);
            REQUIRE(net.edge_age(*b, *nr) == 0);
            REQUIRE(net.edge_age(*nr, *s) == 0);
        } else {
            REQUIRE(net.edge_age(*b, *s) == 0);
        }
    }
}

TEST_CASE("labels: inserted neuron takes the sample label, bmu runs an average") {
    auto net = small_net(9, 3);
    const FeatureVector x{0.1, 0.2, 0.3};
    const auto r1 = net.train_step(x, AffectPoint(0.4, 0.4));
    REQUIRE_FALSE(r1.inserted);  // fresh neurons are not yet habituated
    CHECK(net.neurons()[r1.bmu].label_mean == AffectPoint(0.4, 0.4));
    const auto r2 = net.train_step(x, AffectPoint(0.0, 0.0));
    if (!r2.inserted && r2.bmu == r1.bmu) {
        const auto& m = *net.neurons()[r2.bmu].label_mean;
        CHECK(m.valence() == doctest::Approx(0.2));
        CHECK(net.neurons()[r2.bmu].label_count == 2);
    }
}

TEST_CASE("predict returns the nearest labelled neuron's label") {
    auto net = small_net(10, 2);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 400; ++i) net.train_step(random_vector(rng, 2, 2.0), random_label(rng));
    for (int i = 0; i < 200; ++i) {
        const auto x = random_vector(rng, 2, 2.0);
        double best = INFINITY;
        std::optional<AffectPoint> want;
        for (const auto& n : net.neurons()) {
            if (!n.label_mean) continue;
            const double d = squared_distance(x.values(), n.weight.values());
            if (d < best) {
                best = d;
                want = n.label_mean;
            }
        }
        REQUIRE(want);
        CHECK(net.predict(x) == *want);
    }
}

TEST_CASE("serial and parallel kernels give identical networks") {
    auto a = small_net(12, 16);
    auto b = a;
    a.set_exec(Exec::Serial);
    b.set_exec(Exec::Parallel);
    std::mt19937_64 rng(13);
    for (int i = 0; i < 400; ++i) {
        const auto x = random_vector(rng, 16, 1.5);
        const auto l = random_label(rng);
        a.train_step(x, l);
        b.train_step(x, l);
    }
    CHECK(a == b);

    std::vector<double> ds(a.size()), dp(a.size());
    const auto x = random_vector(rng, 16);
    kernels::gamma_distances_serial(a.neurons(), x, a.global_context(), a.params().distance_weights, ds);
    kernels::gamma_distances_parallel(a.neurons(), x, a.global_context(), a.params().distance_weights, dp);
    CHECK(ds == dp);
    kernels::labelled_distances_serial(a.neurons(), x, ds);
    kernels::labelled_distances_parallel(a.neurons(), x, dp);
    CHECK(ds == dp);
}

TEST_CASE("ties break towards the lower index") {
    const std::vector<double> d{3.0, 1.0, 1.0, 0.5, 0.5};
    const auto bt = kernels::best_two(d);
    CHECK(bt.first == 3);
    CHECK(bt.second == 4);
    CHECK(kernels::argmin(std::vector<double>{2.0, 2.0}) == 0);
}

TEST_CASE("replay walks follow successor tallies without revisits") {
    auto net = small_net(14, 4);
    std::mt19937_64 rng(15);
    for (int i = 0; i < 300; ++i) net.train_step(random_vector(rng, 4, 1.5), random_label(rng));
    const auto trajectories = net.replay_trajectories(3, 50);
    CHECK(!trajectories.empty());
    CHECK(trajectories.size() <= std::min<std::size_t>(50, net.labelled_count()));
    for (const auto& t : trajectories) {
        REQUIRE(!t.empty());
        REQUIRE(t.size() <= 3);
        std::set<std::size_t> seen;
        for (std::size_t i = 0; i < t.size(); ++i) {
            REQUIRE(seen.insert(t[i].neuron).second);
            REQUIRE(t[i].weight == net.neurons()[t[i].neuron].weight);
            if (i > 0) {
                const auto it = net.successor_counts().find({t[i - 1].neuron, t[i].neuron});
                REQUIRE(it != net.successor_counts().end());
                REQUIRE(it->second > 0);
            }
        }
        REQUIRE(net.neurons()[t.front().neuron].label_mean.has_value());
    }
}

TEST_CASE("reset_context clears temporal state only") {
    auto net = small_net(16, 4);
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) net.train_step(random_vector(rng, 4), random_label(rng));
    const auto size = net.size();
    net.reset_context();
    CHECK(net.size() == size);
    CHECK_FALSE(net.previous_winner().has_value());
    for (const auto& c : net.global_context()) CHECK(c == FeatureVector(4));
}
