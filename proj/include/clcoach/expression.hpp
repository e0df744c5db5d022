#pragma once
// Linear facial-expression model standing in for a face encoder: a D x 3
// matrix mapping [valence, arousal, 1] to a feature vector.

#include <cstddef>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "clcoach/affect.hpp"

namespace clcoach {

class ExpressionModel {
public:
    ExpressionModel() = default;
    // Throws ParameterError unless the matrix is D x 3 with full column rank.
    explicit ExpressionModel(Eigen::MatrixXd map);

    // The generic population-level expression map shared by everyone: an
    // orthogonal basis scaled by `affect_gain` on the affect columns and
    // `identity_gain` on the offset column. Fixed for a given dimension.
    static ExpressionModel canonical(std::size_t dim = kDefaultFeatureDim);

    static constexpr double kAffectGain = 3.0;
    static constexpr double kIdentityGain = 1.0;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(map_.rows()); }
    const Eigen::MatrixXd& map() const noexcept { return map_; }

    // M * [v, a, 1], plus i.i.d. N(0, sigma) per component when rng given.
    FeatureVector express(const AffectPoint& p, double noise_sigma = 0.0, std::mt19937_64* rng = nullptr) const;

    // Least-squares [v, a, offset] such that M * z best reproduces x.
    Eigen::Vector3d decode(const FeatureVector& x) const;

    // decode() restricted to (v, a), clamped to the unit square.
    AffectPoint read_affect(const FeatureVector& x) const;

private:
    Eigen::MatrixXd map_;
    Eigen::MatrixXd pinv_;  // 3 x D
};

// Orthonormal basis (D x D) used to build the canonical map and persona
// idiosyncrasies orthogonal to it. Column 0..2 span the canonical map.
const Eigen::MatrixXd& canonical_basis(std::size_t dim);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace clcoach
