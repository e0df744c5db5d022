#include "clcoach/gwr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "clcoach/error.hpp"
#include "clcoach/kernels.hpp"

namespace clcoach {

namespace {

NeuronPair edge_key(std::size_t i, std::size_t j) { return i < j ? NeuronPair{i, j} : NeuronPair{j, i}; }

bool open_unit(double x) { return x > 0.0 && x < 1.0; }

// v += rate * (target - v)
void move_towards(FeatureVector& v, const FeatureVector& target, double rate) {
    auto dst = v.values();
    const auto src = target.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += rate * (src[i] - dst[i]);
}

FeatureVector midpoint(const FeatureVector& a, const FeatureVector& b) {
    std::vector<double> m(a.dim());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
    return FeatureVector(std::move(m));
}

}  // namespace

GwrParams GwrParams::episodic() {
    GwrParams p;
    p.insertion_threshold = 0.35;
    p.with_geometric_weights();
    return p;
}

GwrParams GwrParams::semantic() {
    GwrParams p;
    p.insertion_threshold = 0.30;
    p.with_geometric_weights();
    return p;
}

GwrParams& GwrParams::with_geometric_weights() {
    distance_weights.assign(static_cast<std::size_t>(std::max(depth, 0)) + 1, 0.0);
    double w = 1.0;
    for (auto& a : distance_weights) {
        a = w;
        w *= 0.5;
    }
    const double total = std::accumulate(distance_weights.begin(), distance_weights.end(), 0.0);
    for (auto& a : distance_weights) a /= total;
    return *this;
}

void GwrParams::validate() const {
    if (!open_unit(insertion_threshold)) throw ParameterError("insertion threshold must lie in (0,1)");
    if (!open_unit(habituation_threshold)) throw ParameterError("habituation threshold must lie in (0,1)");
    if (!open_unit(learn_rate_bmu) || !open_unit(learn_rate_neighbor)) {
        throw ParameterError("learning rates must lie in (0,1)");
    }
    if (!(learn_rate_neighbor < learn_rate_bmu)) {
        throw ParameterError("neighbour learning rate must be below the bmu rate");
    }
    if (!(context_blend >= 0.0 && context_blend <= 1.0)) throw ParameterError("context blend must lie in [0,1]");
    if (depth < 0) throw ParameterError("context depth must be non-negative");
    if (distance_weights.size() != static_cast<std::size_t>(depth) + 1) {
        throw ParameterError("expected " + std::to_string(depth + 1) + " distance weights");
    }
    double total = 0.0;
    for (double a : distance_weights) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError("distance weights must be non-negative");
        total += a;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ParameterError("distance weights must sum to 1");
    // The habituation curve only decays monotonically for tau < 1/1.05.
    if (!(tau_bmu > 0.0 && tau_bmu < 1.0 / 1.05) || !(tau_neighbor > 0.0 && tau_neighbor < 1.0 / 1.05)) {
        throw ParameterError("habituation rates must lie in (0, 1/1.05)");
    }
    if (max_edge_age < 1) throw ParameterError("max edge age must be at least 1");
    if (!(label_rate > 0.0 && label_rate <= 1.0)) throw ParameterError("label rate must lie in (0,1]");
}

double habituate(double h, double tau) noexcept {
    return std::clamp(h + tau * 1.05 * (1.0 - h) - tau, 0.01, 1.0);
}

GammaGwrNetwork GammaGwrNetwork::create(const GwrParams& params, std::size_t dim, const FeatureVector& seed_a,
                                        const FeatureVector& seed_b) {
    params.validate();
    if (dim == 0) throw DimensionError("feature dimension must be positive");
    if (seed_a.dim() != dim || seed_b.dim() != dim) {
        throw DimensionError("seed dimension does not match network dimension " + std::to_string(dim));
    }
    GammaGwrNetwork net;
    net.params_ = params;
    net.dim_ = dim;
    const auto depth = static_cast<std::size_t>(params.depth);
    for (const auto* seed : {&seed_a, &seed_b}) {
        Neuron n;
        n.weight = *seed;
        n.contexts.assign(depth, FeatureVector(dim));
        n.uid = net.next_uid_++;
        net.neurons_.push_back(std::move(n));
    }
    net.global_context_.assign(depth, FeatureVector(dim));
    return net;
}

void GammaGwrNetwork::check_dim(const FeatureVector& x) const {
    if (x.dim() != dim_) {
        throw DimensionError("input dimension " + std::to_string(x.dim()) + " != network dimension " +
                             std::to_string(dim_));
    }
}

std::vector<double> GammaGwrNetwork::distances(const FeatureVector& x) const {
    std::vector<double> d(neurons_.size());
    const bool parallel =
        exec_ == Exec::Parallel ||
        (exec_ == Exec::Auto && kernels::prefer_parallel(neurons_.size(), dim_, params_.depth));
    if (parallel) {
        kernels::gamma_distances_parallel(neurons_, x, global_context_, params_.distance_weights, d);
    } else {
        kernels::gamma_distances_serial(neurons_, x, global_context_, params_.distance_weights, d);
    }
    return d;
}

BmuResult GammaGwrNetwork::find_bmu(const FeatureVector& x) const {
    check_dim(x);
    const auto d = distances(x);
    const auto best = kernels::best_two(d);
    return {best.first, best.second, d[best.first], std::exp(-d[best.first])};
}

std::size_t GammaGwrNetwork::labelled_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(neurons_.begin(), neurons_.end(), [](const Neuron& n) { return n.label_mean.has_value(); }));
}

std::optional<int> GammaGwrNetwork::edge_age(std::size_t i, std::size_t j) const {
    const auto it = edges_.find(edge_key(i, j));
    if (it == edges_.end()) return std::nullopt;
    return it->second;
}

StepReport GammaGwrNetwork::train_step(const FeatureVector& x, const std::optional<AffectPoint>& label) {
    check_dim(x);
    const auto match = find_bmu(x);
    const std::size_t b = match.bmu;
    const std::size_t s = match.second;

    StepReport report;
    report.bmu = b;
    report.second = s;
    report.activation = match.activation;
    report.bmu_habituation = neurons_[b].habituation;

    std::vector<std::size_t> neighbours;
    for (auto& [key, age] : edges_) {
        if (key.first == b || key.second == b) {
            ++age;
            neighbours.push_back(key.first == b ? key.second : key.first);
        }
    }

    const bool grow = match.activation < params_.insertion_threshold &&
                      neurons_[b].habituation < params_.habituation_threshold;
    std::size_t winner = b;
    if (grow) {
        Neuron r;
        r.weight = midpoint(neurons_[b].weight, x);
        r.contexts.reserve(global_context_.size());
        for (std::size_t k = 0; k < global_context_.size(); ++k) {
            r.contexts.push_back(midpoint(neurons_[b].contexts[k], global_context_[k]));
        }
        if (label) {
            r.label_mean = *label;
            r.label_count = 1;
        }
        r.uid = next_uid_++;
        winner = neurons_.size();
        neurons_.push_back(std::move(r));
        edges_.erase(edge_key(b, s));
        edges_[edge_key(b, winner)] = 0;
        edges_[edge_key(winner, s)] = 0;
    } else {
        edges_[edge_key(b, s)] = 0;
        Neuron& nb = neurons_[b];
        const double rate_b = params_.learn_rate_bmu * nb.habituation;
        move_towards(nb.weight, x, rate_b);
        for (std::size_t k = 0; k < global_context_.size(); ++k) move_towards(nb.contexts[k], global_context_[k], rate_b);
        for (std::size_t n : neighbours) {
            Neuron& nn = neurons_[n];
            const double rate_n = params_.learn_rate_neighbor * nn.habituation;
            move_towards(nn.weight, x, rate_n);
            for (std::size_t k = 0; k < global_context_.size(); ++k) {
                move_towards(nn.contexts[k], global_context_[k], rate_n);
            }
        }
        if (label) {
            if (nb.label_count == 0) {
                nb.label_mean = *label;
            } else {
                const auto& m = *nb.label_mean;
                nb.label_mean = AffectPoint::clamped(
                    m.valence() + params_.label_rate * (label->valence() - m.valence()),
                    m.arousal() + params_.label_rate * (label->arousal() - m.arousal()));
            }
            ++nb.label_count;
        }
    }

    neurons_[b].habituation = habituate(neurons_[b].habituation, params_.tau_bmu);
    for (std::size_t n : neighbours) neurons_[n].habituation = habituate(neurons_[n].habituation, params_.tau_neighbor);

    std::erase_if(edges_, [&](const auto& e) { return e.second > params_.max_edge_age; });

    report.inserted = grow;
    report.winner = winner;
    remove_orphans(b, s, report);
    winner = report.winner;

    // C_k(t+1) = beta * w_win(t) + (1 - beta) * C_{k-1}(t), with C_0 = w_win.
    if (!global_context_.empty()) {
        const FeatureVector& w = neurons_[winner].weight;
        const double beta = params_.context_blend;
        std::vector<FeatureVector> next;
        next.reserve(global_context_.size());
        for (std::size_t k = 0; k < global_context_.size(); ++k) {
            const FeatureVector& prev = k == 0 ? w : global_context_[k - 1];
            std::vector<double> c(dim_);
            for (std::size_t i = 0; i < dim_; ++i) c[i] = beta * w[i] + (1.0 - beta) * prev[i];
            next.emplace_back(std::move(c));
        }
        global_context_ = std::move(next);
    }

    if (prev_winner_) ++successors_[{*prev_winner_, winner}];
    prev_winner_ = winner;
    ++steps_;
    return report;
}

void GammaGwrNetwork::remove_orphans(std::size_t keep_a, std::size_t keep_b, StepReport& report) {
    std::set<std::size_t> connected;
    for (const auto& [key, age] : edges_) {
        connected.insert(key.first);
        connected.insert(key.second);
    }
    // Highest index first so pending indices stay valid.
    for (std::size_t i = neurons_.size(); i-- > 0;) {
        if (neurons_.size() <= 2) break;
        if (i == keep_a || i == keep_b || i == report.winner) continue;
        if (connected.contains(i) || neurons_[i].label_mean) continue;
        remove_neuron(i);
        auto shift = [i](std::size_t& idx) {
            if (idx > i) --idx;
        };
        shift(keep_a);
        shift(keep_b);
        shift(report.bmu);
        shift(report.second);
        shift(report.winner);
    }
}

void GammaGwrNetwork::remove_neuron(std::size_t index) {
    neurons_.erase(neurons_.begin() + static_cast<std::ptrdiff_t>(index));
    auto remap = [index](std::size_t i) { return i > index ? i - 1 : i; };
    std::map<NeuronPair, int> edges;
    for (const auto& [key, age] : edges_) {
        if (key.first == index || key.second == index) continue;
        edges[edge_key(remap(key.first), remap(key.second))] = age;
    }
    edges_ = std::move(edges);
    std::map<NeuronPair, std::uint64_t> succ;
    for (const auto& [key, count] : successors_) {
        if (key.first == index || key.second == index) continue;
        succ[{remap(key.first), remap(key.second)}] += count;
    }
    successors_ = std::move(succ);
    if (prev_winner_) {
        if (*prev_winner_ == index) {
            prev_winner_.reset();
        } else {
            prev_winner_ = remap(*prev_winner_);
        }
    }
}

AffectPoint GammaGwrNetwork::predict(const FeatureVector& x) const {
    check_dim(x);
    if (labelled_count() == 0) throw NoLabelsError("network has no labelled neurons");
    std::vector<double> d(neurons_.size());
    const bool parallel = exec_ == Exec::Parallel ||
                          (exec_ == Exec::Auto && kernels::prefer_parallel(neurons_.size(), dim_, 0));
    if (parallel) {
        kernels::labelled_distances_parallel(neurons_, x, d);
    } else {
        kernels::labelled_distances_serial(neurons_, x, d);
    }
    return *neurons_[kernels::argmin(d)].label_mean;
}

std::vector<Trajectory> GammaGwrNetwork::replay_trajectories(std::size_t length, std::size_t count) const {
    if (labelled_count() == 0) throw EmptyInputError("network has no labelled neurons to replay");
    std::vector<Trajectory> out;
    if (length == 0) return out;

    // Outgoing tallies per neuron, excluding self-transitions.
    std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> next(neurons_.size());
    for (const auto& [key, c] : successors_) {
        if (key.first != key.second) next[key.first].emplace_back(key.second, c);
    }

    for (std::size_t start = 0; start < neurons_.size() && out.size() < count; ++start) {
        if (!neurons_[start].label_mean) continue;
        Trajectory t;
        std::vector<bool> visited(neurons_.size(), false);
        std::size_t cur = start;
        while (true) {
            visited[cur] = true;
            t.push_back({cur, neurons_[cur].weight, neurons_[cur].label_mean});
            if (t.size() == length) break;
            std::optional<std::size_t> best;
            std::uint64_t best_count = 0;
            for (const auto& [j, c] : next[cur]) {
                if (visited[j]) continue;
                if (c > best_count) {
                    best = j;
                    best_count = c;
                }
            }
            if (!best) break;
            cur = *best;
        }
        out.push_back(std::move(t));
    }
    return out;
}

void GammaGwrNetwork::reset_context() {
    for (auto& c : global_context_) c = FeatureVector(dim_);
    prev_winner_.reset();
}

bool operator==(const GammaGwrNetwork& a, const GammaGwrNetwork& b) {
    return a.params_ == b.params_ && a.dim_ == b.dim_ && a.neurons_ == b.neurons_ && a.edges_ == b.edges_ &&
           a.global_context_ == b.global_context_ && a.successors_ == b.successors_ &&
           a.prev_winner_ == b.prev_winner_ && a.steps_ == b.steps_ && a.next_uid_ == b.next_uid_;
}

}  // namespace clcoach
