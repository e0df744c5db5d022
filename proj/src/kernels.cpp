#include "clcoach/kernels.hpp"

#include <limits>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace clcoach::kernels {

namespace {

inline double gamma_distance(const Neuron& n, const FeatureVector& x, std::span<const FeatureVector> context,
                             std::span<const double> alpha) {
    double d = alpha[0] * squared_distance(x.values(), n.weight.values());
    for (std::size_t k = 0; k < context.size(); ++k) {
        d += alpha[k + 1] * squared_distance(context[k].values(), n.contexts[k].values());
    }
    return d;
}

inline double labelled_distance(const Neuron& n, const FeatureVector& x) {
    if (!n.label_mean) return std::numeric_limits<double>::infinity();
    return squared_distance(x.values(), n.weight.values());
}

}  // namespace

void gamma_distances_serial(std::span<const Neuron> neurons, const FeatureVector& x,
                            std::span<const FeatureVector> context, std::span<const double> alpha,
                            std::span<double> out) {
    for (std::size_t i = 0; i < neurons.size(); ++i) out[i] = gamma_distance(neurons[i], x, context, alpha);
}

void gamma_distances_parallel(std::span<const Neuron> neurons, const FeatureVector& x,
                              std::span<const FeatureVector> context, std::span<const double> alpha,
                              std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(neurons.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        out[u] = gamma_distance(neurons[u], x, context, alpha);
    }
}

void labelled_distances_serial(std::span<const Neuron> neurons, const FeatureVector& x, std::span<double> out) {
    for (std::size_t i = 0; i < neurons.size(); ++i) out[i] = labelled_distance(neurons[i], x);
}

void labelled_distances_parallel(std::span<const Neuron> neurons, const FeatureVector& x,
                                 std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(neurons.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        out[u] = labelled_distance(neurons[u], x);
    }
}

BestTwo best_two(std::span<const double> d) {
    BestTwo r{0, 1};
    if (d[1] < d[0]) r = {1, 0};
    for (std::size_t i = 2; i < d.size(); ++i) {
        if (d[i] < d[r.first]) {
            r.second = r.first;
            r.first = i;
        } else if (d[i] < d[r.second]) {
            r.second = i;
        }
    }
    return r;
}

std::size_t argmin(std::span<const double> d) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (d[i] < d[best]) best = i;
    }
    return best;
}

bool prefer_parallel(std::size_t neurons, std::size_t dim, int depth) noexcept {
    constexpr std::size_t kMinWork = std::size_t{1} << 17;
    return max_threads() > 1 && neurons * dim * static_cast<std::size_t>(depth + 1) >= kMinWork;
}

int max_threads() noexcept {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace clcoach::kernels
