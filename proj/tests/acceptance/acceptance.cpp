// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails or runs over its time budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"

#include "clcoach/analysis.hpp"
#include "clcoach/error.hpp"
#include "clcoach/imagination.hpp"
#include "clcoach/persistence.hpp"
#include "clcoach/pipeline.hpp"
#include "clcoach/service.hpp"
#include "clcoach/simulator.hpp"

using namespace clcoach;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

class Checker {
public:
    void expect(bool cond, const std::string& what) {
        if (!cond && out_.ok) {
            out_.ok = false;
            out_.detail = what;
        }
    }
    bool ok() const { return out_.ok; }
    Outcome done(std::string detail) {
        if (out_.ok) out_.detail = std::move(detail);
        return out_;
    }

private:
    Outcome out_;
};

SimConfig sim_config() {
    SimConfig c;
    c.bank = &testing::shipped_bank();
    return c;
}

FeatureVector random_vector(std::mt19937_64& rng, std::size_t dim, double scale) {
    std::normal_distribution<double> n(0.0, scale);
    std::vector<double> v(dim);
    for (auto& x : v) x = n(rng);
    return FeatureVector(std::move(v));
}

Outcome augmentation_arithmetic() {
    Checker c;
    const auto persona = build_persona(resolve_persona("understated"));
    const ExpressionGenerator gen(persona.expression, 0.02, 1);
    const LinearAnnotator ann;
    auto model = initial_model("acc", sim_config());
    PersonalisationSetup setup;
    setup.generator = &gen;
    std::uint64_t expected_seen = 0;
    for (const std::size_t n : {10u, 11u, 57u, 150u, 151u, 450u}) {
        ResponseBuffer buf;
        buf.open();
        Timestamp t = 0;
        for (const auto& f : synth_response(persona, SessionState::Grateful, n, n)) ingest_frame(buf, t++, f.features, ann);
        const auto steps_before = model.episodic().steps();
        const auto out = close_response(buf, Condition::C3, &model, setup, n * 7);
        expected_seen += 500;
        c.expect(out.learn && out.learn->samples == 500, std::to_string(n) + " frames: learn report != 500");
        c.expect(model.episodic().steps() - steps_before == 500,
                 std::to_string(n) + " frames: episodic steps " + std::to_string(model.episodic().steps() - steps_before));
        c.expect(model.samples_seen() == expected_seen, "samples_seen drifted");
    }
    const auto originals = sample_frames(std::vector<LabelledSample>(10, {ann.model().express(AffectPoint(0.2, 0.2)), AffectPoint(0.2, 0.2)}), 10, 3);
    c.expect(augment(originals, gen).size() == 10 + 490, "augment(10 originals) != 500");
    return c.done("6 responses of 10..450 frames, 500 vectors each");
}

Outcome grid_constants() {
    Checker c;
    const auto g = grid_targets();
    double max_abs = 0.0;
    std::set<std::pair<double, double>> distinct;
    for (const auto& p : g) {
        max_abs = std::max({max_abs, std::abs(p.valence()), std::abs(p.arousal())});
        distinct.insert({p.valence(), p.arousal()});
    }
    c.expect(g.size() == 49, "grid size " + std::to_string(g.size()));
    c.expect(distinct.size() == 49, "grid points not distinct");
    c.expect(max_abs == 0.75, "max component " + std::to_string(max_abs));
    return c.done("49 points, max |component| 0.75");
}

Outcome window_semantics() {
    Checker c;
    const LinearAnnotator ann;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    std::uniform_int_distribution<std::size_t> len(1, 600);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = rep == 0 ? 150 : rep == 1 ? 151 : len(rng);
        ResponseBuffer buf;
        buf.open();
        std::vector<AffectPoint> anns;
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = ann.model().express(AffectPoint(u(rng), u(rng)), 0.05, &rng);
            anns.push_back(ingest_frame(buf, static_cast<Timestamp>(i), x, ann));
        }
        const auto out = close_response(buf, Condition::C2, nullptr, {}, 0);
        const std::size_t first = n > 150 ? n - 150 : 0;
        double sv = 0, sa = 0;
        for (std::size_t i = first; i < n; ++i) {
            sv += anns[i].valence();
            sa += anns[i].arousal();
        }
        const double k = static_cast<double>(n - first);
        worst = std::max({worst, std::abs(out.summary.valence() - sv / k), std::abs(out.summary.arousal() - sa / k)});
    }
    c.expect(worst <= 1e-9, "max deviation " + std::to_string(worst));
    std::ostringstream d;
    d << "50 responses, max deviation " << worst;
    return c.done(d.str());
}

Outcome quadrant_oracle() {
    Checker c;
    std::size_t mismatches = 0;
    for (int i = -100; i <= 100; ++i) {
        for (int j = -100; j <= 100; ++j) {
            const double v = i / 100.0, a = j / 100.0;
            mismatches += classify_quadrant(AffectPoint(v, a)) != oracle::quadrant(v, a);
        }
    }
    const double above = std::nextafter(0.10, 1.0);
    c.expect(mismatches == 0, std::to_string(mismatches) + " mismatches on the scan");
    c.expect(classify_quadrant(AffectPoint(0.10, -0.10)) == Quadrant::Neutral, "band edge not neutral");
    c.expect(classify_quadrant(AffectPoint(above, 0.0)) == Quadrant::Q1, "just above band");
    c.expect(classify_quadrant(AffectPoint(-above, -above)) == Quadrant::Q3, "just below band");
    return c.done("201x201 scan, 40401 points agree");
}

Outcome fsm_traces() {
    Checker c;
    const auto catalogue = load_persona_catalogue(default_persona_catalogue());
    std::vector<Persona> personas;
    for (const auto& s : catalogue) personas.push_back(build_persona(s));
    const std::vector<SessionState> order{SessionState::Introduction, SessionState::Impactful, SessionState::Grateful,
                                          SessionState::Accomplishments, SessionState::Feedback, SessionState::Survey,
                                          SessionState::GoodBye};
    const auto cfg = sim_config();
    std::size_t sessions = 0;
    for (auto cond : {Condition::C1, Condition::C2, Condition::C3}) {
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            const auto run = run_session(cond, personas[seed % personas.size()], seed, cfg);
            std::size_t affect = 0;
            for (const auto& r : run.log.records()) affect += r.at("type") == "robot" && r.contains("quadrant");
            const std::string tag = std::string(to_string(cond)) + " seed " + std::to_string(seed);
            c.expect(run.trace == order, tag + ": states not S1..S7 in order");
            c.expect(affect == (cond == Condition::C1 ? 0u : 6u), tag + ": " + std::to_string(affect) + " affect utterances");
            c.expect(check_session_log(run.log).ok(), tag + ": log check failed");
            ++sessions;
        }
    }
    return c.done(std::to_string(sessions) + " sessions; C1 0, C2/C3 6 affect utterances each");
}

Outcome gwr_laws() {
    Checker c;
    std::mt19937_64 rng(77);
    const std::size_t dim = 8;
    auto net = GammaGwrNetwork::create(GwrParams::episodic(), dim, random_vector(rng, dim, 1.0), random_vector(rng, dim, 1.0));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::size_t inserts = 0;
    auto index_of = [&](std::uint64_t uid) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < net.size(); ++i)
            if (net.neurons()[i].uid == uid) return i;
        return std::nullopt;
    };
    for (int step = 0; step < 1000 && c.ok(); ++step) {
        const std::string at = "step " + std::to_string(step) + ": ";
        std::map<std::uint64_t, double> hab;
        for (const auto& n : net.neurons()) hab[n.uid] = n.habituation;
        const auto x = random_vector(rng, dim, 1.5);
        const auto match = net.find_bmu(x);
        const auto uid_b = net.neurons()[match.bmu].uid;
        const auto uid_s = net.neurons()[match.second].uid;
        const double h_b = net.neurons()[match.bmu].habituation;
        const auto r = net.train_step(x, AffectPoint(u(rng), u(rng)));
        inserts += r.inserted;

        const bool should_grow =
            match.activation < net.params().insertion_threshold && h_b < net.params().habituation_threshold;
        c.expect(r.inserted == should_grow, at + "growth rule violated");
        for (const auto& n : net.neurons()) {
            const auto it = hab.find(n.uid);
            if (it != hab.end()) c.expect(n.habituation <= it->second, at + "habituation increased");
        }
        for (const auto& [key, age] : net.edges()) c.expect(age <= net.params().max_edge_age, at + "edge older than max");

        const auto b = index_of(uid_b), s = index_of(uid_s);
        c.expect(b && s, at + "bmu or second vanished");
        if (!(b && s)) break;
        if (r.inserted) {
            // the new neuron sits between bmu and second, both links fresh
            std::optional<std::size_t> nr;
            for (std::size_t i = 0; i < net.size(); ++i)
                if (!hab.contains(net.neurons()[i].uid)) nr = i;
            c.expect(nr && net.edge_age(*b, *nr) == 0 && net.edge_age(*nr, *s) == 0, at + "inserted edges not fresh");
        } else {
            c.expect(net.edge_age(*b, *s) == 0, at + "bmu-second edge age not 0");
        }
    }
    c.expect(inserts > 0, "no growth in 1000 steps");
    return c.done("1000 steps, " + std::to_string(inserts) + " insertions, final size " + std::to_string(net.size()));
}

Outcome personalisation_benefit() {
    Checker c;
    const auto cfg = sim_config();
    std::ostringstream d;
    std::size_t tested = 0;
    for (const auto& spec : load_persona_catalogue(default_persona_catalogue())) {
        if (std::abs(spec.annotator_bias.valence()) < 0.3 || std::abs(spec.annotator_bias.arousal()) < 0.3) continue;
        ++tested;
        const auto persona = build_persona(spec);
        std::vector<double> c2, c3;
        std::size_t wins = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto m2 = metrics_of(Condition::C2, spec.id, seed, run_session(Condition::C2, persona, seed, cfg));
            const auto m3 = metrics_of(Condition::C3, spec.id, seed, run_session(Condition::C3, persona, seed, cfg));
            c2.push_back(m2.exercise_error[2]);
            c3.push_back(m3.exercise_error[2]);
            wins += m3.exercise_error[2] < m2.exercise_error[2];
        }
        const auto test = mann_whitney_u(c3, c2, Alternative::Less);
        c.expect(wins >= 16, spec.id + ": C3 better in only " + std::to_string(wins) + "/20");
        c.expect(test.p < 0.05, spec.id + ": one-tailed p = " + std::to_string(test.p));
        const double mean2 = std::accumulate(c2.begin(), c2.end(), 0.0) / 20;
        const double mean3 = std::accumulate(c3.begin(), c3.end(), 0.0) / 20;
        d << spec.id << " " << wins << "/20 p=" << test.p << " (C2 " << mean2 << ", C3 " << mean3 << "); ";
    }
    c.expect(tested > 0, "no persona with |bias| >= 0.3 on both axes");
    return c.done(d.str());
}

Outcome statistics_oracles() {
    Checker c;
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<std::size_t> size(1, 8);
    double worst = 0.0;
    for (int k = 0; k < 500; ++k) {
        const std::size_t n = size(rng), m = size(rng);
        std::vector<double> pool(n + m);
        std::iota(pool.begin(), pool.end(), 0.0);
        std::uniform_real_distribution<double> jitter(0.0, 0.5);
        for (auto& v : pool) v += jitter(rng);  // distinct, no ties
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::vector<double> x(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
        const std::vector<double> y(pool.begin() + static_cast<std::ptrdiff_t>(n), pool.end());
        const auto ref = oracle::mann_whitney_enumerated(n, m, oracle::u_pairs(x, y));
        const auto l = mann_whitney_u(x, y, Alternative::Less);
        const auto g = mann_whitney_u(x, y, Alternative::Greater);
        const auto t = mann_whitney_u(x, y, Alternative::TwoSided);
        c.expect(l.method == TestMethod::Exact, "exact method not used");
        c.expect(l.statistic == oracle::u_pairs(x, y), "U differs from pair count");
        worst = std::max({worst, std::abs(l.p - ref.less), std::abs(g.p - ref.greater), std::abs(t.p - ref.two_sided)});
    }
    c.expect(worst <= 1e-12, "max p deviation " + std::to_string(worst));

    const auto kw = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    c.expect(std::abs(kw.statistic - 7.2) <= 1e-9, "H = " + std::to_string(kw.statistic));

    const std::vector<double> p{0.001, 0.02, 0.3, 0.9};
    const auto adj = bonferroni(p, 4);
    for (std::size_t i = 0; i < p.size(); ++i) {
        c.expect(adj[i] == std::min(1.0, p[i] * 4), "bonferroni value");
        c.expect(adj[i] >= p[i], "bonferroni not conservative");
    }
    bool threw = false;
    try {
        bonferroni(p, 3);
    } catch (const ParameterError&) {
        threw = true;
    }
    c.expect(threw, "bonferroni accepted m < number of p-values");
    std::ostringstream d;
    d << "500 MWU cases max |dp| " << worst << "; H " << kw.statistic << "; bonferroni exact";
    return c.done(d.str());
}

Outcome sentence_bank_contract() {
    Checker c;
    const auto bank = load_banks(std::string(CLCOACH_DATA_DIR) + "/banks.txt");
    c.expect(bank.total() >= 120, "only " + std::to_string(bank.total()) + " utterances");
    std::size_t keys = 0;
    for (const auto& k : SentenceBank::required_keys()) {
        c.expect(bank.contains(k) && !bank.at(k).empty(), "empty key " + k);
        ++keys;
    }
    return c.done(std::to_string(bank.total()) + " utterances, " + std::to_string(keys) + " reachable keys non-empty");
}

Outcome persistence_laws() {
    Checker c;
    testing::TempDir dir;
    std::mt19937_64 rng(9);
    const auto canon = ExpressionModel::canonical();
    std::vector<FeatureVector> probes;
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    for (int i = 0; i < 100; ++i) probes.push_back(canon.express(AffectPoint(u(rng), u(rng)), 0.1, &rng));

    // direct save/load
    auto run = run_session(Condition::C3, build_persona(resolve_persona("masked")), 4, sim_config());
    const auto& model = *run.model;
    save_model(model, dir.path() / "a.model");
    const auto loaded = load_model(dir.path() / "a.model");
    save_model(loaded, dir.path() / "b.model");
    c.expect(loaded == model, "loaded model differs");
    c.expect(read_file(dir.path() / "a.model") == read_file(dir.path() / "b.model"), "re-saved file differs");
    for (const auto& x : probes) c.expect(loaded.predict_affect(x) == model.predict_affect(x), "prediction differs");

    // service restart
    ServiceConfig cfg;
    cfg.data_dir = dir.path() / "svc";
    cfg.live.bank = &testing::shipped_bank();
    std::string saved_bytes;
    {
        SessionService svc(cfg);
        const auto id = svc.create_session(Condition::C3, "pat", 3).session.id;
        svc.post_event(id, UserInput{UserInput::Kind::Reply, "yes"});
        for (const auto& p : {AffectPoint(0.5, 0.4), AffectPoint(-0.4, 0.3)}) {
            svc.post_event(id, AffectFrames{std::vector<AffectPoint>(150, p)});
            svc.post_event(id, UserInput{UserInput::Kind::Reply, "story"});
        }
        const auto files = svc.close(id);
        saved_bytes = read_file(*files.model);
    }
    const auto before = deserialize_model(saved_bytes);
    SessionService restarted(cfg);
    const auto id2 = restarted.create_session(Condition::C3, "pat").session.id;
    c.expect(restarted.memory_snapshot(id2).samples_seen == 1000, "restarted session did not load the saved model");
    const auto files2 = restarted.close(id2);
    const auto after_bytes = read_file(*files2.model);
    c.expect(after_bytes == saved_bytes, "model file changed across restart");
    const auto after = deserialize_model(after_bytes);
    for (const auto& x : probes) c.expect(after.predict_affect(x) == before.predict_affect(x), "restart changed a prediction");
    return c.done("100 probes equal; files bit-identical; restart keeps predictions");
}

struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"augmentation arithmetic", 1, augmentation_arithmetic},
        {"grid constants", 1, grid_constants},
        {"window semantics", 1, window_semantics},
        {"quadrant oracle", 1, quadrant_oracle},
        {"FSM traces", 30, fsm_traces},
        {"GWR laws", 10, gwr_laws},
        {"personalisation benefit", 120, personalisation_benefit},
        {"statistics oracles", 30, statistics_oracles},
        {"sentence-bank contract", 1, sentence_bank_contract},
        {"persistence laws", 10, persistence_laws},
    };
    int failures = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = cr.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (out.ok && secs > cr.budget_s) {
            out.ok = false;
            out.detail += " [over time budget]";
        }
        failures += !out.ok;
        std::printf("%s  %-24s %7.2fs / %gs  %s\n", out.ok ? "PASS" : "FAIL", cr.name, secs, cr.budget_s,
                    out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
