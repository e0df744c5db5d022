#include "clcoach/expression.hpp"

#include <map>
#include <mutex>

#include "clcoach/error.hpp"

namespace clcoach {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    // splitmix64 finaliser over a combined word
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

const Eigen::MatrixXd& canonical_basis(std::size_t dim) {
    static std::mutex mu;
    static std::map<std::size_t, Eigen::MatrixXd> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(dim);
    if (it == cache.end()) {
        std::mt19937_64 rng(0xC0FFEEULL + dim);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (Eigen::Index c = 0; c < g.cols(); ++c) {
            for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = normal(rng);
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
        it = cache.emplace(dim, std::move(q)).first;
    }
    return it->second;
}

ExpressionModel::ExpressionModel(Eigen::MatrixXd map) : map_(std::move(map)) {
    if (map_.cols() != 3 || map_.rows() < 3) throw ParameterError("expression map must be D x 3 with D >= 3");
    if (!map_.allFinite()) throw ParameterError("expression map has non-finite entries");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(map_);
    if (lu.rank() < 3) throw ParameterError("expression map is rank deficient");
    const Eigen::MatrixXd gram = map_.transpose() * map_;
    pinv_ = gram.ldlt().solve(map_.transpose());
}

ExpressionModel ExpressionModel::canonical(std::size_t dim) {
    if (dim < 3) throw ParameterError("feature dimension must be at least 3");
    const auto& q = canonical_basis(dim);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), 3);
    m.col(0) = kAffectGain * q.col(0);
    m.col(1) = kAffectGain * q.col(1);
    m.col(2) = kIdentityGain * q.col(2);
    return ExpressionModel(std::move(m));
}

FeatureVector ExpressionModel::express(const AffectPoint& p, double noise_sigma, std::mt19937_64* rng) const {
    const Eigen::Vector3d z(p.valence(), p.arousal(), 1.0);
    const Eigen::VectorXd f = map_ * z;
    std::vector<double> out(f.data(), f.data() + f.size());
    if (rng != nullptr && noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, noise_sigma);
        for (auto& x : out) x += noise(*rng);
    }
    return FeatureVector(std::move(out));
}

Eigen::Vector3d ExpressionModel::decode(const FeatureVector& x) const {
    if (x.dim() != dim()) throw DimensionError("feature dimension does not match expression model");
    const Eigen::Map<const Eigen::VectorXd> v(x.values().data(), static_cast<Eigen::Index>(x.dim()));
    return pinv_ * v;
}

AffectPoint ExpressionModel::read_affect(const FeatureVector& x) const {
    const auto z = decode(x);
    return AffectPoint::clamped(z(0), z(1));
}

}  // namespace clcoach
