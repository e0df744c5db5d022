#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "clcoach/gwr.hpp"
#include "clcoach/imagination.hpp"
#include "clcoach/kernels.hpp"

using namespace clcoach;

namespace {

FeatureVector random_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n;
    std::vector<double> v(dim);
    for (auto& x : v) x = n(rng);
    return FeatureVector(std::move(v));
}

struct Layer {
    std::vector<Neuron> neurons;
    std::vector<FeatureVector> context;
    std::vector<double> alpha;
};

// Random neurons with the episodic memory's context depth.
Layer random_layer(std::size_t count, std::size_t dim) {
    std::mt19937_64 rng(1);
    Layer l;
    l.alpha = GwrParams::episodic().with_geometric_weights().distance_weights;
    const std::size_t depth = l.alpha.size() - 1;
    for (std::size_t k = 0; k < depth; ++k) l.context.push_back(random_vector(rng, dim));
    for (std::size_t i = 0; i < count; ++i) {
        Neuron n;
        n.weight = random_vector(rng, dim);
        for (std::size_t k = 0; k < depth; ++k) n.contexts.push_back(random_vector(rng, dim));
        l.neurons.push_back(std::move(n));
    }
    return l;
}

template <bool Parallel>
void BM_GammaDistances(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(1));
    const auto layer = random_layer(static_cast<std::size_t>(state.range(0)), dim);
    std::mt19937_64 rng(2);
    const auto x = random_vector(rng, dim);
    std::vector<double> out(layer.neurons.size());
    for (auto _ : state) {
        if constexpr (Parallel) {
            kernels::gamma_distances_parallel(layer.neurons, x, layer.context, layer.alpha, out);
        } else {
            kernels::gamma_distances_serial(layer.neurons, x, layer.context, layer.alpha, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_Augment(benchmark::State& state) {
    const auto model = ExpressionModel::canonical();
    const ExpressionGenerator gen(model, 0.02, 3);
    std::mt19937_64 rng(4);
    std::vector<LabelledSample> originals;
    for (std::size_t i = 0; i < kSampledFrames; ++i) originals.push_back({model.express(AffectPoint(0.1, 0.2), 0.05, &rng), AffectPoint(0.1, 0.2)});
    for (auto _ : state) {
        auto out = Parallel ? augment_parallel(originals, gen) : augment_serial(originals, gen);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(BM_GammaDistances<false>)->Args({200, 64})->Args({2000, 64});
BENCHMARK(BM_GammaDistances<true>)->Args({200, 64})->Args({2000, 64});
BENCHMARK(BM_Augment<false>);
BENCHMARK(BM_Augment<true>);

BENCHMARK_MAIN();
