#pragma once
// Affect primitives shared by every module: the valence/arousal point,
// circumplex quadrants, the 5-second annotation window and feature vectors.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clcoach {

inline constexpr int kFramesPerSecond = 30;
inline constexpr std::size_t kWindowFrames = 150;  // 5 s at 30 FPS
inline constexpr double kDefaultNeutralBand = 0.10;
inline constexpr std::size_t kDefaultFeatureDim = 64;

// Logical frame clock (frame index at 30 FPS).
using Timestamp = std::int64_t;

// A point of the valence/arousal plane. Both components are finite and lie
// in [-1, 1]; the constructor rejects anything else.
class AffectPoint {
public:
    AffectPoint() = default;
    AffectPoint(double valence, double arousal);

    // Clamps into [-1, 1]^2 instead of rejecting (NaN still rejected).
    static AffectPoint clamped(double valence, double arousal);

    double valence() const noexcept { return valence_; }
    double arousal() const noexcept { return arousal_; }

    friend bool operator==(const AffectPoint&, const AffectPoint&) = default;

private:
    double valence_ = 0.0;
    double arousal_ = 0.0;
};

// |dv| + |da|
double l1_distance(const AffectPoint& a, const AffectPoint& b) noexcept;

enum class Quadrant { Q1, Q2, Q3, Q4, Neutral };

std::string_view to_string(Quadrant q) noexcept;
Quadrant quadrant_from_string(std::string_view s);

// Neutral iff both |v| and |a| are within the closed band. Outside the band
// a component equal to zero counts as positive.
Quadrant classify_quadrant(const AffectPoint& p, double neutral_band = kDefaultNeutralBand);

// Fixed-dimension real vector produced by the (external) face encoder.
class FeatureVector {
public:
    FeatureVector() = default;
    explicit FeatureVector(std::size_t dim, double fill = 0.0);
    explicit FeatureVector(std::vector<double> values);
    FeatureVector(std::initializer_list<double> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

private:
    std::vector<double> values_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

struct TimedAffect {
    Timestamp time = 0;
    AffectPoint point;
};

// Ring buffer of the most recent annotations; capacity defaults to 150.
class AffectWindow {
public:
    explicit AffectWindow(std::size_t capacity = kWindowFrames);

    // Throws OrderingError if t precedes the newest entry.
    void push(Timestamp t, const AffectPoint& p);
    void clear() noexcept { entries_.clear(); }

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool empty() const noexcept { return entries_.empty(); }
    const std::deque<TimedAffect>& entries() const noexcept { return entries_; }

private:
    std::size_t capacity_;
    std::deque<TimedAffect> entries_;
};

// Component-wise arithmetic mean. Throws EmptyInputError on an empty window.
AffectPoint summarize_window(const AffectWindow& w);

// Mean of an arbitrary non-empty list of points.
AffectPoint mean_affect(std::span<const AffectPoint> points);

}  // namespace clcoach
