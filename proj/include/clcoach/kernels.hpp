#pragma once
// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version computing the same per-element arithmetic in the same
// order, so results are bit-identical regardless of thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "clcoach/affect.hpp"
#include "clcoach/gwr.hpp"

namespace clcoach::kernels {

// out[i] = alpha[0]*|x - w_i|^2 + sum_k alpha[k]*|context[k-1] - c_{i,k-1}|^2
void gamma_distances_serial(std::span<const Neuron> neurons, const FeatureVector& x,
                            std::span<const FeatureVector> context, std::span<const double> alpha,
                            std::span<double> out);
void gamma_distances_parallel(std::span<const Neuron> neurons, const FeatureVector& x,
                              std::span<const FeatureVector> context, std::span<const double> alpha,
                              std::span<double> out);

// Weight-only squared distance, restricted to neurons carrying a label
// (others get +inf).
void labelled_distances_serial(std::span<const Neuron> neurons, const FeatureVector& x,
                               std::span<double> out);
void labelled_distances_parallel(std::span<const Neuron> neurons, const FeatureVector& x,
                                 std::span<double> out);

struct BestTwo {
    std::size_t first = 0;
    std::size_t second = 0;
};

// Smallest and second-smallest entries; ties go to the lower index.
// Requires at least two entries.
BestTwo best_two(std::span<const double> d);

// Index of the smallest entry, lowest index on ties.
std::size_t argmin(std::span<const double> d);

// Whether a scan of `neurons * dim * (depth + 1)` multiply-adds is worth
// spreading across threads.
bool prefer_parallel(std::size_t neurons, std::size_t dim, int depth) noexcept;

int max_threads() noexcept;

}  // namespace clcoach::kernels
