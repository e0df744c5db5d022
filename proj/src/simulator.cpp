#include "clcoach/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <map>
#include <numeric>
#include <exception>
#include <random>
#include <sstream>

#include "clcoach/error.hpp"
#include "clcoach/kernels.hpp"
#include "clcoach/pipeline.hpp"

namespace clcoach {

using nlohmann::json;

void SimConfig::validate() const {
    if (bank == nullptr) throw ParameterError("simulation needs a sentence bank");
    if (min_frames == 0 || min_frames > max_frames) throw ParameterError("frame range must satisfy 1 <= min <= max");
    if (!(generator_noise >= 0.0)) throw ParameterError("generator noise must be non-negative");
    grid.validate();
    episodic.validate();
    semantic.validate();
}

GdmPersonalModel initial_model(const std::string& person_id, const SimConfig& config) {
    const auto canonical = ExpressionModel::canonical(config.feature_dim);
    return GdmPersonalModel::create(person_id, config.feature_dim, canonical.express(AffectPoint(0.5, 0.5)),
                                    canonical.express(AffectPoint(-0.5, -0.5)), config.episodic, config.semantic);
}

namespace {

class SessionDriver {
public:
    SessionDriver(Condition c, const Persona& p, std::uint64_t seed, const SimConfig& cfg)
        : condition_(c),
          persona_(p),
          config_(cfg),
          rng_(mix_seed(seed, stable_hash("simulator"))),
          dialogue_seed_(mix_seed(seed, stable_hash("dialogue"))),
          dialogue_(c, *cfg.bank, dialogue_seed_),
          annotator_(ExpressionModel::canonical(cfg.feature_dim)) {
        if (c == Condition::C3) {
            run_.model.emplace(initial_model(p.id(), cfg));
            generator_ = make_generator(cfg.generator, GeneratorConfig{p.expression, cfg.generator_noise,
                                                                       mix_seed(seed, stable_hash("imagination"))});
        }
        run_.log.append(meta_record({c, p.id(), seed, dialogue_seed_, "simulator"}));
    }

    SessionRun run() {
        emit(dialogue_.start());
        int guard = 0;
        while (!dialogue_.finished()) {
            if (++guard > 1000) throw Error("simulated session did not terminate");
            switch (dialogue_.state()) {
                case SessionState::Introduction: {
                    std::bernoulli_distribution hesitate(persona_.spec.hesitation);
                    answer(hesitate(rng_) ? "not yet, give me a moment" : "yes, I'm ready");
                    break;
                }
                case SessionState::Feedback: {
                    std::bernoulli_distribution liked(0.7);
                    answer(liked(rng_) ? "yes, I enjoyed it" : "no, not really");
                    break;
                }
                case SessionState::Survey: answer("ok, done"); break;
                default: describe(); break;
            }
        }
        run_.log.append({{"t", t_}, {"type", "end"}, {"state", std::string(state_tag(dialogue_.state()))}});
        run_.trace = dialogue_.trace();
        return std::move(run_);
    }

private:
    void emit(const std::vector<RobotEvent>& events) {
        for (const auto& e : events) run_.log.append(robot_record(t_, dialogue_.state(), e));
    }

    void post(UserEvent e) {
        e.time = t_;
        run_.log.append(user_record(t_, dialogue_.state(), e));
        emit(dialogue_.advance(e));
    }

    void answer(std::string transcript) { post(UserEvent{YesNo{std::move(transcript)}, t_}); }

    void describe() {
        const auto state = dialogue_.state();
        const int item = dialogue_.item();
        std::uniform_int_distribution<std::size_t> length(config_.min_frames, config_.max_frames);
        const std::size_t n = length(rng_);
        const auto frames = synth_response(persona_, state, n, rng_());

        buffer_.open();
        for (const auto& f : frames) ingest_frame(buffer_, t_++, f.features, annotator_);
        const std::size_t first = n > kWindowFrames ? n - kWindowFrames : 0;
        std::vector<AffectPoint> truths;
        for (std::size_t i = first; i < n; ++i) truths.push_back(frames[i].truth);

        PersonalisationSetup setup{generator_.get(), config_.grid, config_.sampled_frames, config_.exec};
        auto* model = run_.model ? &*run_.model : nullptr;
        const auto outcome = close_response(buffer_, condition_, model, setup, rng_());

        ResponseRecord rec;
        rec.state = state;
        rec.item = item;
        rec.frames = n;
        rec.truth = mean_affect(truths);
        rec.summary = outcome.summary;
        rec.annotator_summary = outcome.annotator_summary;
        rec.emitted = classify_quadrant(outcome.summary);
        rec.true_quadrant = classify_quadrant(rec.truth);
        rec.learn = outcome.learn;
        run_.responses.push_back(rec);

        const std::string tag(state_tag(state));
        run_.log.append({{"t", t_},
                         {"type", "frames"},
                         {"state", tag},
                         {"item", item},
                         {"count", n},
                         {"annotator_mean", affect_json(outcome.annotator_summary)},
                         {"true_mean", affect_json(rec.truth)}});
        if (outcome.learn) run_.log.append(learn_record(t_, *outcome.learn, run_.model->samples_seen()));
        run_.log.append({{"t", t_},
                         {"type", "summary"},
                         {"state", tag},
                         {"item", item},
                         {"summary", affect_json(outcome.summary)},
                         {"quadrant", std::string(to_string(rec.emitted))},
                         {"source", outcome.learn ? "personal" : "annotator"}});

        const auto& stories = persona_.stories;
        const std::string story = stories.empty() ? "..." : stories[rng_() % stories.size()];
        post(UserEvent{DescriptiveDone{story, outcome.summary}, t_});
    }

    Condition condition_;
    const Persona& persona_;
    const SimConfig& config_;
    std::mt19937_64 rng_;
    std::uint64_t dialogue_seed_;
    DialogueSession dialogue_;
    LinearAnnotator annotator_;
    std::unique_ptr<Generator> generator_;
    ResponseBuffer buffer_;
    Timestamp t_ = 0;
    SessionRun run_;
};

std::string format_double(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

struct Job {
    Condition condition;
    std::size_t persona;
    std::uint64_t seed;
};

std::vector<Job> jobs_of(const ExperimentPlan& plan) {
    std::vector<Job> jobs;
    for (const auto c : plan.conditions) {
        for (std::size_t p = 0; p < plan.personas.size(); ++p) {
            for (const auto s : plan.seeds) jobs.push_back({c, p, s});
        }
    }
    return jobs;
}

std::vector<Persona> personas_of(const ExperimentPlan& plan, const SimConfig& config) {
    std::vector<Persona> out;
    for (const auto& spec : plan.personas) out.push_back(build_persona(spec, config.feature_dim));
    return out;
}

RunMetrics run_job(const Job& job, const std::vector<Persona>& personas, const SimConfig& config) {
    const auto& persona = personas[job.persona];
    const auto run = run_session(job.condition, persona, job.seed, config);
    return metrics_of(job.condition, persona.id(), job.seed, run);
}

}  // namespace

SessionRun run_session(Condition condition, const Persona& persona, std::uint64_t seed, const SimConfig& config) {
    config.validate();
    return SessionDriver(condition, persona, seed, config).run();
}

RunMetrics metrics_of(Condition condition, const std::string& persona, std::uint64_t seed, const SessionRun& run) {
    RunMetrics m;
    m.condition = condition;
    m.persona = persona;
    m.seed = seed;
    std::array<int, 3> counts{};
    std::size_t agree = 0;
    for (const auto& r : run.responses) {
        const auto ex = static_cast<std::size_t>(r.state) - static_cast<std::size_t>(SessionState::Impactful);
        m.exercise_error[ex] += r.error();
        ++counts[ex];
        if (r.emitted == r.true_quadrant) ++agree;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (counts[i] > 0) m.exercise_error[i] /= counts[i];
    }
    m.quadrant_agreement = run.responses.empty() ? 0.0 : static_cast<double>(agree) / run.responses.size();
    if (run.model) {
        m.episodic_nodes = run.model->episodic().size();
        m.semantic_nodes = run.model->semantic().size();
        m.samples_seen = run.model->samples_seen();
    }
    return m;
}

bool operator==(const RunMetrics& a, const RunMetrics& b) {
    return a.condition == b.condition && a.persona == b.persona && a.seed == b.seed &&
           a.exercise_error == b.exercise_error && a.quadrant_agreement == b.quadrant_agreement &&
           a.episodic_nodes == b.episodic_nodes && a.semantic_nodes == b.semantic_nodes &&
           a.samples_seen == b.samples_seen;
}

std::string MetricsTable::to_csv() const {
    std::string out = std::string(kHeader) + "\n";
    for (const auto& r : rows) {
        out += std::string(to_string(r.condition)) + "," + r.persona + "," + std::to_string(r.seed);
        for (const double e : r.exercise_error) out += "," + format_double(e);
        out += "," + format_double(r.quadrant_agreement) + "," + std::to_string(r.episodic_nodes) + "," +
               std::to_string(r.semantic_nodes) + "," + std::to_string(r.samples_seen) + "\n";
    }
    return out;
}

MetricsTable MetricsTable::from_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw DataError("metrics table: unexpected header");
    MetricsTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 10) throw DataError("metrics table line " + std::to_string(line_no) + ": expected 10 fields");
        try {
            RunMetrics m;
            m.condition = condition_from_string(cells[0]);
            m.persona = cells[1];
            m.seed = std::stoull(cells[2]);
            for (std::size_t i = 0; i < 3; ++i) m.exercise_error[i] = std::stod(cells[3 + i]);
            m.quadrant_agreement = std::stod(cells[6]);
            m.episodic_nodes = std::stoull(cells[7]);
            m.semantic_nodes = std::stoull(cells[8]);
            m.samples_seen = std::stoull(cells[9]);
            table.rows.push_back(std::move(m));
        } catch (const std::exception& e) {
            throw DataError("metrics table line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

ExperimentPlan ExperimentPlan::from_json(const json& j, const std::filesystem::path& catalogue) {
    ExperimentPlan plan;
    try {
        for (const auto& c : j.at("conditions")) plan.conditions.push_back(condition_from_string(c.get<std::string>()));
        for (const auto& p : j.at("personas")) {
            plan.personas.push_back(p.is_string() ? resolve_persona(p.get<std::string>(), catalogue)
                                                  : persona_spec_from_json(p));
        }
        const auto& seeds = j.at("seeds");
        if (seeds.is_object()) {
            const auto from = seeds.at("from").get<std::uint64_t>();
            const auto count = seeds.at("count").get<std::uint64_t>();
            for (std::uint64_t i = 0; i < count; ++i) plan.seeds.push_back(from + i);
        } else {
            for (const auto& s : seeds) plan.seeds.push_back(s.get<std::uint64_t>());
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid experiment plan: ") + e.what());
    } catch (const ParameterError& e) {
        throw DataError(std::string("invalid experiment plan: ") + e.what());
    }
    plan.validate();
    return plan;
}

void ExperimentPlan::validate() const {
    if (conditions.empty() || personas.empty() || seeds.empty()) {
        throw ParameterError("experiment plan needs at least one condition, persona and seed");
    }
}

MetricsTable run_experiment_serial(const ExperimentPlan& plan, const SimConfig& config) {
    plan.validate();
    config.validate();
    const auto personas = personas_of(plan, config);
    MetricsTable table;
    for (const auto& job : jobs_of(plan)) table.rows.push_back(run_job(job, personas, config));
    return table;
}

MetricsTable run_experiment_parallel(const ExperimentPlan& plan, const SimConfig& config) {
    plan.validate();
    config.validate();
    const auto personas = personas_of(plan, config);
    const auto jobs = jobs_of(plan);
    std::vector<RunMetrics> rows(jobs.size());
    std::vector<std::exception_ptr> failures(jobs.size());
    const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            rows[i] = run_job(jobs[i], personas, config);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    return MetricsTable{std::move(rows)};
}

MetricsTable run_experiment(const ExperimentPlan& plan, const SimConfig& config, Exec exec) {
    const bool parallel = exec == Exec::Parallel || (exec == Exec::Auto && kernels::max_threads() > 1);
    return parallel ? run_experiment_parallel(plan, config) : run_experiment_serial(plan, config);
}

}  // namespace clcoach

namespace clcoach {

double metric_value(const RunMetrics& row, std::string_view metric) {
    if (metric == "error_ex1") return row.exercise_error[0];
    if (metric == "error_ex2") return row.exercise_error[1];
    if (metric == "error_ex3") return row.exercise_error[2];
    if (metric == "quadrant_agreement") return row.quadrant_agreement;
    throw ParameterError("unknown metric '" + std::string(metric) + "'");
}

ExperimentSummary summarize_experiment(const MetricsTable& table, std::string_view metric, double alpha) {
    if (table.rows.empty()) throw EmptyInputError("metrics table is empty");
    const bool lower_better = metric.starts_with("error");
    ExperimentSummary out;
    out.metric = std::string(metric);
    std::map<Condition, std::vector<double>> groups;
    for (const auto& r : table.rows) groups[r.condition].push_back(metric_value(r, metric));
    std::vector<std::vector<double>> ordered;
    for (auto& [c, v] : groups) {
        ConditionStats s;
        s.condition = c;
        s.n = v.size();
        s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        s.median = sorted.size() % 2 ? sorted[sorted.size() / 2]
                                     : (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]) / 2.0;
        out.conditions.push_back(s);
        ordered.push_back(v);
    }
    if (ordered.size() < 2) return out;
    out.kruskal = kruskal_wallis(ordered);
    std::vector<double> raw;
    for (auto a = groups.begin(); a != groups.end(); ++a) {
        for (auto b = std::next(a); b != groups.end(); ++b) {
            PairTest t;
            t.first = b->first;
            t.second = a->first;
            t.alternative = lower_better ? Alternative::Less : Alternative::Greater;
            t.result = mann_whitney_u(b->second, a->second, t.alternative);
            raw.push_back(t.result.p);
            out.pairs.push_back(t);
        }
    }
    const auto adjusted = bonferroni(raw, raw.size());
    for (std::size_t i = 0; i < out.pairs.size(); ++i) {
        out.pairs[i].p_adjusted = adjusted[i];
        out.pairs[i].significant = adjusted[i] < alpha;
    }
    return out;
}

std::string ExperimentSummary::to_text() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "metric " << metric << "\n";
    for (const auto& c : conditions) {
        out << "  " << to_string(c.condition) << "  n=" << c.n << "  mean=" << c.mean << "  median=" << c.median << "\n";
    }
    if (kruskal) out << "  Kruskal-Wallis H=" << kruskal->statistic << " p=" << std::setprecision(6) << kruskal->p << "\n";
    for (const auto& p : pairs) {
        out << "  " << to_string(p.first) << (p.alternative == Alternative::Less ? " < " : " > ") << to_string(p.second)
            << "  U=" << std::setprecision(1) << p.result.statistic << " p=" << std::setprecision(6) << p.result.p
            << " adjusted=" << p.p_adjusted << (p.significant ? " *" : "") << "\n";
    }
    return out.str();
}

}  // namespace clcoach
