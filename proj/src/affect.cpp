#include "clcoach/affect.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clcoach/error.hpp"

namespace clcoach {

namespace {

bool in_unit_range(double x) { return std::isfinite(x) && x >= -1.0 && x <= 1.0; }

}  // namespace

AffectPoint::AffectPoint(double valence, double arousal) : valence_(valence), arousal_(arousal) {
    if (!in_unit_range(valence) || !in_unit_range(arousal)) {
        throw ParameterError("affect point out of [-1,1]: (" + std::to_string(valence) + ", " +
                             std::to_string(arousal) + ")");
    }
}

AffectPoint AffectPoint::clamped(double valence, double arousal) {
    if (std::isnan(valence) || std::isnan(arousal)) throw ParameterError("affect point is NaN");
    return AffectPoint(std::clamp(valence, -1.0, 1.0), std::clamp(arousal, -1.0, 1.0));
}

double l1_distance(const AffectPoint& a, const AffectPoint& b) noexcept {
    return std::abs(a.valence() - b.valence()) + std::abs(a.arousal() - b.arousal());
}

std::string_view to_string(Quadrant q) noexcept {
    switch (q) {
        case Quadrant::Q1: return "Q1";
        case Quadrant::Q2: return "Q2";
        case Quadrant::Q3: return "Q3";
        case Quadrant::Q4: return "Q4";
        case Quadrant::Neutral: return "NEUTRAL";
    }
    return "?";
}

Quadrant quadrant_from_string(std::string_view s) {
    for (Quadrant q : {Quadrant::Q1, Quadrant::Q2, Quadrant::Q3, Quadrant::Q4, Quadrant::Neutral}) {
        if (to_string(q) == s) return q;
    }
    throw ParameterError("unknown quadrant: " + std::string(s));
}

Quadrant classify_quadrant(const AffectPoint& p, double neutral_band) {
    if (!(neutral_band >= 0.0 && neutral_band < 1.0)) {
        throw ParameterError("neutral band must lie in [0,1)");
    }
    const double v = p.valence();
    const double a = p.arousal();
    if (std::abs(v) <= neutral_band && std::abs(a) <= neutral_band) return Quadrant::Neutral;
    const bool pos_v = v >= 0.0;
    const bool pos_a = a >= 0.0;
    if (pos_v) return pos_a ? Quadrant::Q1 : Quadrant::Q4;
    return pos_a ? Quadrant::Q2 : Quadrant::Q3;
}

FeatureVector::FeatureVector(std::size_t dim, double fill) : values_(dim, fill) {
    if (!std::isfinite(fill)) throw ParameterError("feature fill value not finite");
}

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
    for (double x : values_) {
        if (!std::isfinite(x)) throw ParameterError("feature vector has a non-finite component");
    }
}

FeatureVector::FeatureVector(std::initializer_list<double> values)
    : FeatureVector(std::vector<double>(values)) {}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

AffectWindow::AffectWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ParameterError("window capacity must be positive");
}

void AffectWindow::push(Timestamp t, const AffectPoint& p) {
    if (!entries_.empty() && t < entries_.back().time) {
        throw OrderingError("window timestamp " + std::to_string(t) + " precedes tail " +
                            std::to_string(entries_.back().time));
    }
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back({t, p});
}

AffectPoint summarize_window(const AffectWindow& w) {
    if (w.empty()) throw EmptyInputError("cannot summarise an empty window");
    double sv = 0.0;
    double sa = 0.0;
    for (const auto& e : w.entries()) {
        sv += e.point.valence();
        sa += e.point.arousal();
    }
    const auto n = static_cast<double>(w.size());
    return AffectPoint::clamped(sv / n, sa / n);
}

AffectPoint mean_affect(std::span<const AffectPoint> points) {
    if (points.empty()) throw EmptyInputError("mean of no affect points");
    double sv = 0.0;
    double sa = 0.0;
    for (const auto& p : points) {
        sv += p.valence();
        sa += p.arousal();
    }
    const auto n = static_cast<double>(points.size());
    return AffectPoint::clamped(sv / n, sa / n);
}

}  // namespace clcoach
