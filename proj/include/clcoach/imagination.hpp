#pragma once
// Imagination-based augmentation: each sampled frame is translated to every
// point of a capped 7x7 valence/arousal grid by a pluggable generator.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clcoach/affect.hpp"
#include "clcoach/expression.hpp"
#include "clcoach/gdm.hpp"
#include "clcoach/gwr.hpp"

namespace clcoach {

inline constexpr std::size_t kSampledFrames = 10;
inline constexpr double kImaginationCap = 0.75;

struct GridSpec {
    std::vector<double> levels{-0.75, -0.50, -0.25, 0.0, 0.25, 0.50, 0.75};

    // Ascending, distinct, within the cap.
    void validate() const;
};

// valence-major, then arousal, both ascending.
std::vector<AffectPoint> grid_targets(const GridSpec& spec = {});

// Generates a feature vector showing the seed's owner expressing `target`.
// Implementations must be deterministic and safe to call concurrently.
class Generator {
public:
    virtual ~Generator() = default;
    virtual std::string_view name() const noexcept = 0;
    virtual FeatureVector imagine(const FeatureVector& seed, const AffectPoint& target) const = 0;
};

// Returns the seed unchanged.
class NullGenerator final : public Generator {
public:
    std::string_view name() const noexcept override { return "null"; }
    FeatureVector imagine(const FeatureVector& seed, const AffectPoint& target) const override;
};

// Moves the seed along the affect directions of an expression model so that
// the model's read-out of the result equals the target, then adds seeded
// Gaussian noise. Identity (everything the read-out ignores) is preserved.
class ExpressionGenerator final : public Generator {
public:
    ExpressionGenerator(ExpressionModel model, double noise_sigma, std::uint64_t seed);

    std::string_view name() const noexcept override { return "synthetic"; }
    FeatureVector imagine(const FeatureVector& seed, const AffectPoint& target) const override;

    double noise_sigma() const noexcept { return noise_sigma_; }
    const ExpressionModel& model() const noexcept { return model_; }

private:
    ExpressionModel model_;
    double noise_sigma_;
    std::uint64_t seed_;
};

struct GeneratorConfig {
    ExpressionModel model;     // used by "synthetic"
    double noise_sigma = 0.02;
    std::uint64_t seed = 0;
};

// Known names: "synthetic", "null". Unknown names throw ParameterError.
std::unique_ptr<Generator> make_generator(std::string_view name, const GeneratorConfig& config);
std::vector<std::string> generator_names();

// Up to n frames drawn uniformly without replacement (all of them when fewer
// are available), returned in their original order.
std::vector<LabelledSample> sample_frames(std::span<const LabelledSample> frames, std::size_t n,
                                          std::uint64_t rng_seed);

// Originals first (labels verbatim), then for each original in order its
// imagined vectors in grid order, each labelled with its grid target.
std::vector<LabelledSample> augment_serial(std::span<const LabelledSample> originals, const Generator& gen,
                                           const GridSpec& spec = {});
std::vector<LabelledSample> augment_parallel(std::span<const LabelledSample> originals, const Generator& gen,
                                             const GridSpec& spec = {});
std::vector<LabelledSample> augment(std::span<const LabelledSample> originals, const Generator& gen,
                                    const GridSpec& spec = {}, Exec exec = Exec::Auto);

}  // namespace clcoach
