#pragma once
// Brute-force reference computations shared by unit and acceptance tests.

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "clcoach/affect.hpp"

namespace oracle {

inline clcoach::Quadrant quadrant(double v, double a, double band = 0.10) {
    using clcoach::Quadrant;
    if (std::abs(v) <= band && std::abs(a) <= band) return Quadrant::Neutral;
    if (v >= 0 && a >= 0) return Quadrant::Q1;
    if (v < 0 && a >= 0) return Quadrant::Q2;
    if (v < 0 && a < 0) return Quadrant::Q3;
    return Quadrant::Q4;
}

// U of x: number of pairs with x_i > y_j (no ties assumed).
inline double u_pairs(const std::vector<double>& x, const std::vector<double>& y) {
    double u = 0;
    for (double a : x)
        for (double b : y) u += a > b;
    return u;
}

struct ExactP {
    double less = 0, greater = 0, two_sided = 0;
};

// Every way of choosing which n of the n+m ranks belong to x.
inline ExactP mann_whitney_enumerated(std::size_t n, std::size_t m, double u_obs) {
    const std::size_t total_n = n + m;
    double total = 0, le = 0, ge = 0;
    for (std::uint32_t mask = 0; mask < (1u << total_n); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != n) continue;
        double rank_sum = 0;
        for (std::size_t b = 0; b < total_n; ++b)
            if (mask & (1u << b)) rank_sum += static_cast<double>(b + 1);
        const double u = rank_sum - static_cast<double>(n * (n + 1)) / 2.0;
        total += 1;
        le += u <= u_obs;
        ge += u >= u_obs;
    }
    ExactP p;
    p.less = le / total;
    p.greater = ge / total;
    p.two_sided = std::min(1.0, 2.0 * std::min(p.less, p.greater));
    return p;
}

}  // namespace oracle
