#include "clcoach/gdm.hpp"

#include <string>

#include "clcoach/error.hpp"

namespace clcoach {

GdmPersonalModel::GdmPersonalModel(std::string person_id, GammaGwrNetwork episodic, GammaGwrNetwork semantic,
                                   std::size_t cadence)
    : person_id_(std::move(person_id)),
      episodic_(std::move(episodic)),
      semantic_(std::move(semantic)),
      cadence_(cadence) {
    if (episodic_.dim() != semantic_.dim()) throw DimensionError("episodic and semantic dimensions differ");
    if (cadence_ == 0) throw ParameterError("consolidation cadence must be at least 1");
}

GdmPersonalModel GdmPersonalModel::create(std::string person_id, std::size_t dim, const FeatureVector& seed_a,
                                          const FeatureVector& seed_b, const GwrParams& episodic,
                                          const GwrParams& semantic, std::size_t cadence) {
    return GdmPersonalModel(std::move(person_id), GammaGwrNetwork::create(episodic, dim, seed_a, seed_b),
                            GammaGwrNetwork::create(semantic, dim, seed_a, seed_b), cadence);
}

LearnReport GdmPersonalModel::learn_response(std::span<const LabelledSample> samples) {
    if (samples.empty()) throw EmptyInputError("learn_response needs at least one sample");
    for (const auto& s : samples) {
        if (s.features.dim() != dim()) {
            throw DimensionError("sample dimension " + std::to_string(s.features.dim()) + " != model dimension " +
                                 std::to_string(dim()));
        }
    }
    for (const auto& s : samples) episodic_.train_step(s.features, s.label);
    samples_seen_ += samples.size();
    ++pending_responses_;

    LearnReport report;
    report.samples = samples.size();
    if (pending_responses_ >= cadence_) {
        report.semantic_steps = consolidate();
        report.consolidated = true;
    }
    report.episodic_nodes = episodic_.size();
    report.semantic_nodes = semantic_.size();
    return report;
}

std::size_t GdmPersonalModel::consolidate() {
    if (episodic_.labelled_count() == 0) throw EmptyInputError("episodic memory is empty; nothing to consolidate");
    const auto trajectories = episodic_.replay_trajectories(kReplayLength, episodic_.size());
    std::size_t steps = 0;
    for (const auto& t : trajectories) {
        semantic_.reset_context();
        for (const auto& item : t) {
            semantic_.train_step(item.weight, item.label);
            ++steps;
        }
    }
    pending_responses_ = 0;
    return steps;
}

void GdmPersonalModel::set_exec(Exec e) noexcept {
    episodic_.set_exec(e);
    semantic_.set_exec(e);
}

}  // namespace clcoach
