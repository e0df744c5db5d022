#pragma once
// Full synthetic sessions: a persona talks through the seven-state dialogue
// while its frames run through the perception pipeline under one condition.
// Everything is driven by a logical frame clock, so a run is a pure function
// of (condition, persona, seed, config).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "clcoach/analysis.hpp"
#include "clcoach/dialogue.hpp"
#include "clcoach/gdm.hpp"
#include "clcoach/imagination.hpp"
#include "clcoach/persona.hpp"
#include "clcoach/session_log.hpp"

namespace clcoach {

struct SimConfig {
    const SentenceBank* bank = nullptr;  // required
    GridSpec grid;
    std::string generator = "synthetic";
    double generator_noise = 0.02;
    std::size_t min_frames = 150;
    std::size_t max_frames = 450;
    std::size_t sampled_frames = kSampledFrames;
    GwrParams episodic = GwrParams::episodic();
    GwrParams semantic = GwrParams::semantic();
    std::size_t feature_dim = kDefaultFeatureDim;
    Exec exec = Exec::Serial;  // inside one run; experiments parallelise across runs

    void validate() const;
};

struct ResponseRecord {
    SessionState state = SessionState::Introduction;
    int item = 1;
    std::size_t frames = 0;
    AffectPoint truth;              // mean true affect over the summary window
    AffectPoint summary;            // what the dialogue was given
    AffectPoint annotator_summary;  // generic annotator window mean
    Quadrant emitted = Quadrant::Neutral;
    Quadrant true_quadrant = Quadrant::Neutral;
    std::optional<LearnReport> learn;

    double error() const noexcept { return l1_distance(summary, truth); }
};

struct SessionRun {
    SessionLog log;
    std::vector<ResponseRecord> responses;
    std::optional<GdmPersonalModel> model;
    std::vector<SessionState> trace;
};

// Fresh personal model: two unlabelled seed neurons at the canonical
// expressions of (0.5, 0.5) and (-0.5, -0.5).
GdmPersonalModel initial_model(const std::string& person_id, const SimConfig& config);

SessionRun run_session(Condition condition, const Persona& persona, std::uint64_t seed, const SimConfig& config);

struct RunMetrics {
    Condition condition = Condition::C1;
    std::string persona;
    std::uint64_t seed = 0;
    std::array<double, 3> exercise_error{};  // mean |dv|+|da| per exercise
    double quadrant_agreement = 0.0;
    std::size_t episodic_nodes = 0;
    std::size_t semantic_nodes = 0;
    std::uint64_t samples_seen = 0;
};

RunMetrics metrics_of(Condition condition, const std::string& persona, std::uint64_t seed, const SessionRun& run);

struct MetricsTable {
    std::vector<RunMetrics> rows;

    static constexpr const char* kHeader =
        "condition,persona,seed,error_ex1,error_ex2,error_ex3,quadrant_agreement,episodic_nodes,semantic_nodes,"
        "samples_seen";
    std::string to_csv() const;
    static MetricsTable from_csv(std::string_view text);
    friend bool operator==(const MetricsTable&, const MetricsTable&) = default;
};

bool operator==(const RunMetrics& a, const RunMetrics& b);

struct ExperimentPlan {
    std::vector<Condition> conditions;
    std::vector<PersonaSpec> personas;
    std::vector<std::uint64_t> seeds;

    // {"conditions": ["C2","C3"], "personas": ["understated", {...}], "seeds": [1,2] | {"from":1,"count":20}}
    static ExperimentPlan from_json(const nlohmann::json& j,
                                    const std::filesystem::path& catalogue = default_persona_catalogue());
    void validate() const;
};

// Rows ordered condition-major, then persona, then seed, whichever executor runs them.
MetricsTable run_experiment_serial(const ExperimentPlan& plan, const SimConfig& config);
MetricsTable run_experiment_parallel(const ExperimentPlan& plan, const SimConfig& config);
MetricsTable run_experiment(const ExperimentPlan& plan, const SimConfig& config, Exec exec = Exec::Auto);

// error_ex1..3 (lower is better) or quadrant_agreement (higher is better).
double metric_value(const RunMetrics& row, std::string_view metric);

struct ConditionStats {
    Condition condition = Condition::C1;
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
};

struct ExperimentSummary {
    std::string metric;
    std::vector<ConditionStats> conditions;
    std::optional<TestResult> kruskal;  // with two or more conditions
    // Later condition vs earlier one, one-tailed towards "later is better",
    // Bonferroni over all pairs.
    std::vector<PairTest> pairs;

    std::string to_text() const;
};

ExperimentSummary summarize_experiment(const MetricsTable& table, std::string_view metric = "error_ex3",
                                       double alpha = 0.05);

}  // namespace clcoach
