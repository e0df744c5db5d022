#pragma once
// Growing-when-required network with Gamma temporal context.
//
// Every neuron carries a weight vector plus K context descriptors. Matching
// uses d = a0*|x - w|^2 + sum_k ak*|C_k - c_k|^2 against the global context
// C, activation exp(-d). A neuron is inserted only when the best match is
// both poor (activation < insertion threshold) and already well trained
// (habituation < habituation threshold). Neurons also accumulate a running
// (valence, arousal) label used for regression at inference time.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "clcoach/affect.hpp"

namespace clcoach {

struct GwrParams {
    double insertion_threshold = 0.35;    // a_T
    double habituation_threshold = 0.3;   // h_T
    double learn_rate_bmu = 0.1;          // eps_b
    double learn_rate_neighbor = 0.01;    // eps_n
    double context_blend = 0.7;           // beta
    int depth = 2;                        // K
    std::vector<double> distance_weights; // a_0..a_K; empty means geometric default
    double tau_bmu = 0.3;
    double tau_neighbor = 0.1;
    int max_edge_age = 100;
    double label_rate = 0.5;

    static GwrParams episodic();
    static GwrParams semantic();

    // Fills distance_weights with a_k proportional to 2^-k, normalised.
    GwrParams& with_geometric_weights();
    // Throws ParameterError on any violated constraint.
    void validate() const;

    friend bool operator==(const GwrParams&, const GwrParams&) = default;
};

struct Neuron {
    FeatureVector weight;
    std::vector<FeatureVector> contexts;  // K descriptors
    double habituation = 1.0;
    std::optional<AffectPoint> label_mean;
    std::uint64_t label_count = 0;
    std::uint64_t uid = 0;  // stable identity, never reused within a network

    friend bool operator==(const Neuron&, const Neuron&) = default;
};

using NeuronPair = std::pair<std::size_t, std::size_t>;

struct BmuResult {
    std::size_t bmu = 0;
    std::size_t second = 0;
    double distance = 0.0;
    double activation = 1.0;
};

struct StepReport {
    std::size_t bmu = 0;        // best match before any insertion
    std::size_t second = 0;
    bool inserted = false;
    std::size_t winner = 0;     // neuron representing the sample (new one when inserted)
    double activation = 1.0;
    double bmu_habituation = 1.0;  // habituation of the bmu when growth was decided
};

struct ReplayItem {
    std::size_t neuron = 0;
    FeatureVector weight;
    std::optional<AffectPoint> label;
};
using Trajectory = std::vector<ReplayItem>;

enum class Exec { Serial, Parallel, Auto };

class GammaGwrNetwork {
public:
    // Two neurons with the given seed weights, zero contexts, no edges.
    static GammaGwrNetwork create(const GwrParams& params, std::size_t dim,
                                  const FeatureVector& seed_a, const FeatureVector& seed_b);

    BmuResult find_bmu(const FeatureVector& x) const;
    StepReport train_step(const FeatureVector& x, const std::optional<AffectPoint>& label = std::nullopt);

    // Label of the nearest labelled neuron by weight distance only.
    AffectPoint predict(const FeatureVector& x) const;

    // Greedy walks over the temporal successor tallies, one per labelled
    // neuron in index order, at most `count` of them.
    std::vector<Trajectory> replay_trajectories(std::size_t length, std::size_t count) const;

    // Forget the temporal context (global context and previous winner).
    void reset_context();

    void set_exec(Exec e) noexcept { exec_ = e; }

    const GwrParams& params() const noexcept { return params_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return neurons_.size(); }
    std::size_t labelled_count() const noexcept;
    const std::vector<Neuron>& neurons() const noexcept { return neurons_; }
    const std::map<NeuronPair, int>& edges() const noexcept { return edges_; }
    std::optional<int> edge_age(std::size_t i, std::size_t j) const;
    const std::vector<FeatureVector>& global_context() const noexcept { return global_context_; }
    const std::map<NeuronPair, std::uint64_t>& successor_counts() const noexcept { return successors_; }
    std::optional<std::size_t> previous_winner() const noexcept { return prev_winner_; }
    std::uint64_t steps() const noexcept { return steps_; }

    friend bool operator==(const GammaGwrNetwork& a, const GammaGwrNetwork& b);

private:
    friend struct NetworkCodec;
    GammaGwrNetwork() = default;

    void check_dim(const FeatureVector& x) const;
    std::vector<double> distances(const FeatureVector& x) const;
    void remove_orphans(std::size_t keep_a, std::size_t keep_b, StepReport& report);
    void remove_neuron(std::size_t index);

    GwrParams params_;
    std::size_t dim_ = 0;
    std::vector<Neuron> neurons_;
    std::map<NeuronPair, int> edges_;  // key (lo, hi)
    std::vector<FeatureVector> global_context_;
    std::map<NeuronPair, std::uint64_t> successors_;  // (previous winner, winner)
    std::optional<std::size_t> prev_winner_;
    std::uint64_t steps_ = 0;
    std::uint64_t next_uid_ = 0;
    Exec exec_ = Exec::Auto;
};

// Habituation decay: h + tau*1.05*(1-h) - tau, clamped to [0.01, 1].
double habituate(double h, double tau) noexcept;

}  // namespace clcoach
