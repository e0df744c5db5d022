#pragma once
// Per-person dual memory: a fast episodic network that personalises within
// a session and a slower semantic network fed by replay from the episodic one.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clcoach/affect.hpp"
#include "clcoach/gwr.hpp"

namespace clcoach {

struct LabelledSample {
    FeatureVector features;
    AffectPoint label;
};

struct LearnReport {
    std::size_t samples = 0;  // vectors consumed by this call
    std::size_t episodic_nodes = 0;
    std::size_t semantic_nodes = 0;
    bool consolidated = false;
    std::size_t semantic_steps = 0;
};

inline constexpr std::size_t kReplayLength = 3;

class GdmPersonalModel {
public:
    GdmPersonalModel(std::string person_id, GammaGwrNetwork episodic, GammaGwrNetwork semantic,
                     std::size_t cadence = 1);

    // Both memories seeded with the same two prototypes.
    static GdmPersonalModel create(std::string person_id, std::size_t dim, const FeatureVector& seed_a,
                                   const FeatureVector& seed_b, const GwrParams& episodic = GwrParams::episodic(),
                                   const GwrParams& semantic = GwrParams::semantic(), std::size_t cadence = 1);

    // Trains every sample into the episodic memory in order; consolidates
    // once `cadence` responses have accumulated.
    LearnReport learn_response(std::span<const LabelledSample> samples);

    AffectPoint predict_affect(const FeatureVector& x) const { return episodic_.predict(x); }

    // Replays episodic trajectories into the semantic memory and returns the
    // number of semantic training steps. The episodic memory is untouched.
    std::size_t consolidate();

    const std::string& person_id() const noexcept { return person_id_; }
    const GammaGwrNetwork& episodic() const noexcept { return episodic_; }
    const GammaGwrNetwork& semantic() const noexcept { return semantic_; }
    std::size_t cadence() const noexcept { return cadence_; }
    std::uint64_t samples_seen() const noexcept { return samples_seen_; }
    std::size_t pending_responses() const noexcept { return pending_responses_; }
    std::size_t dim() const noexcept { return episodic_.dim(); }

    void set_exec(Exec e) noexcept;

    friend bool operator==(const GdmPersonalModel&, const GdmPersonalModel&) = default;

private:
    friend struct ModelCodec;

    std::string person_id_;
    GammaGwrNetwork episodic_;
    GammaGwrNetwork semantic_;
    std::size_t cadence_ = 1;
    std::uint64_t samples_seen_ = 0;
    std::size_t pending_responses_ = 0;
};

}  // namespace clcoach
