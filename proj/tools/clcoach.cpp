// clcoach: simulate | experiment | analyze | serve | interactive
// Exit codes: 0 ok, 1 usage, 2 data, 3 runtime.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "clcoach/analysis.hpp"
#include "clcoach/error.hpp"
#include "clcoach/http_api.hpp"
#include "clcoach/persistence.hpp"
#include "clcoach/service.hpp"
#include "clcoach/simulator.hpp"

using namespace clcoach;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

const std::string kShared = CLCOACH_DATA_DIR;

struct Common {
    std::string banks = kShared + "/banks.txt";
    std::string personas = kShared + "/personas.json";
    std::string instruments = kShared + "/instruments.json";
    std::string generator = "synthetic";
};

std::string fmt_point(const AffectPoint& p) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << "(" << std::setw(6) << p.valence() << ", " << std::setw(6) << p.arousal()
      << ")";
    return s.str();
}

void print_events(std::ostream& out, const std::vector<RobotEvent>& events) {
    for (const auto& e : events) {
        if (e.kind == RobotEvent::Kind::Gesture) {
            out << "  [" << to_string(e.gesture) << "]\n";
        } else {
            out << "robot: " << e.text;
            if (e.quadrant) out << "  {" << to_string(*e.quadrant) << "}";
            out << "\n";
        }
    }
}

int cmd_simulate(const Common& c, const std::string& condition, const std::string& persona, std::uint64_t seed,
                 const std::string& log_out, bool quiet) {
    const auto bank = load_banks(c.banks);
    SimConfig cfg;
    cfg.bank = &bank;
    cfg.generator = c.generator;
    const auto p = build_persona(resolve_persona(persona, c.personas));
    const auto cond = condition_from_string(condition);
    const auto run = run_session(cond, p, seed, cfg);

    if (!log_out.empty()) {
        if (log_out == "-") {
            std::cout << run.log.to_text();
            quiet = true;
        } else {
            write_file_atomic(log_out, run.log.to_text());
        }
    }
    const auto check = check_session_log(run.log);
    if (!quiet) {
        std::cout << "condition " << to_string(cond) << "  persona " << p.id() << "  seed " << seed << "\n";
        std::cout << "state item frames  true affect        summary            emitted  true\n";
        for (const auto& r : run.responses) {
            std::cout << std::left << std::setw(6) << state_tag(r.state) << std::setw(5) << r.item << std::setw(7)
                      << r.frames << fmt_point(r.truth) << "  " << fmt_point(r.summary) << "  " << std::setw(9)
                      << to_string(r.emitted) << to_string(r.true_quadrant) << "\n";
        }
        const auto m = metrics_of(cond, p.id(), seed, run);
        std::cout << std::right << "\n" << MetricsTable{{m}}.to_csv();
        std::cout << "log: " << run.log.size() << " records, " << (check.ok() ? "valid" : "INVALID") << "\n";
    }
    for (const auto& problem : check.problems) std::cerr << "log: " << problem << "\n";
    return check.ok() ? kOk : kRuntime;
}

int cmd_experiment(const Common& c, const std::string& plan_path, const std::string& out, const std::string& metric,
                   bool serial) {
    const auto bank = load_banks(c.banks);
    SimConfig cfg;
    cfg.bank = &bank;
    cfg.generator = c.generator;
    nlohmann::json plan_json;
    try {
        plan_json = nlohmann::json::parse(read_file(plan_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(plan_path + ": " + e.what());
    }
    const auto plan = ExperimentPlan::from_json(plan_json, c.personas);
    const auto table = run_experiment(plan, cfg, serial ? Exec::Serial : Exec::Auto);
    if (out.empty() || out == "-") {
        std::cout << table.to_csv();
    } else {
        write_file_atomic(out, table.to_csv());
    }
    std::cerr << summarize_experiment(table, metric).to_text();
    return kOk;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string part;
    while (std::getline(in, part, sep)) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

int cmd_analyze(const Common& c, const std::string& survey, const std::string& metrics, std::vector<std::string> dims,
                const std::vector<std::string>& direction_specs, double alpha, const std::string& csv_out,
                const std::string& json_out, const std::string& metric) {
    if (!metrics.empty()) {
        const auto table = MetricsTable::from_csv(read_file(metrics));
        std::cout << summarize_experiment(table, metric, alpha).to_text();
        return kOk;
    }
    if (survey.empty()) throw CLI::ValidationError("analyze", "needs --survey or --metrics");
    const auto instruments = load_instruments(c.instruments);
    const auto records = parse_survey_csv(read_file(survey), instruments);
    const auto scores = score_subscales(records, instruments);
    std::vector<std::string> expanded;
    for (const auto& d : dims) {
        for (auto& part : split(d, ',')) expanded.push_back(part);
    }
    if (expanded.empty() || (expanded.size() == 1 && expanded[0] == "all")) expanded = instruments.subscale_names();

    // DIM:C1<C2 or DIM:C1>C2, repeated for each declared pair.
    std::map<std::string, std::vector<PairDirection>> directions;
    for (const auto& spec : direction_specs) {
        const auto colon = spec.find(':');
        const auto rel = spec.find_first_of("<>", colon == std::string::npos ? 0 : colon);
        if (colon == std::string::npos || rel == std::string::npos) {
            throw CLI::ValidationError("--direction", "expected DIM:CA<CB or DIM:CA>CB, got " + spec);
        }
        directions[spec.substr(0, colon)].push_back(
            {condition_from_string(spec.substr(colon + 1, rel - colon - 1)), condition_from_string(spec.substr(rel + 1)),
             spec[rel] == '<' ? Alternative::Less : Alternative::Greater});
    }
    const auto report = compare_conditions(scores, expanded, instruments, directions, alpha);
    std::cout << report.to_text();
    if (!csv_out.empty()) write_file_atomic(csv_out, report.to_csv());
    if (!json_out.empty()) write_file_atomic(json_out, report.to_json().dump(2) + "\n");
    return kOk;
}

ServiceConfig service_config(const std::string& data, const SentenceBank& bank, const Common& c) {
    ServiceConfig cfg;
    cfg.data_dir = data.empty() ? data_dir_from_env("clcoach-data") : std::filesystem::path(data);
    cfg.live.bank = &bank;
    cfg.live.generator = c.generator;
    return cfg;
}

int cmd_serve(const Common& c, const std::string& host, int port, const std::string& data) {
    const auto bank = load_banks(c.banks);
    SessionService service(service_config(data, bank, c));
    std::cerr << "clcoach: serving on http://" << host << ":" << port << "  data " << service.config().data_dir.string()
              << "\n";
    if (!serve_http(service, host, port)) {
        std::cerr << "clcoach: could not listen on " << host << ":" << port << "\n";
        return kRuntime;
    }
    return kOk;
}

// Same SessionService as `serve`, driven from the terminal. Text lines are
// replies; "/pad V A [N]" streams N affect frames (default 150); "/features
// v1 v2 ..." posts one feature frame; "/snapshot"; "/state"; "/quit".
int cmd_interactive(const Common& c, const std::string& condition, const std::string& person,
                    std::optional<std::uint64_t> seed, const std::string& data) {
    const auto bank = load_banks(c.banks);
    SessionService service(service_config(data, bank, c));
    const auto created = service.create_session(condition_from_string(condition), person, seed);
    const auto id = created.session.id;
    std::cout << "session " << id << " (" << condition << ", " << person << ")\n";
    print_events(std::cout, created.events);

    std::string line;
    while (!service.info(id).finished && std::getline(std::cin, line)) {
        if (line.empty()) continue;
        try {
            if (line == "/quit") break;
            if (line == "/state") {
                std::cout << service.info(id).to_json().dump() << "\n";
            } else if (line == "/snapshot") {
                const auto s = service.memory_snapshot(id);
                std::cout << "episodic " << s.episodic_nodes << " nodes, semantic " << s.semantic_nodes
                          << " nodes, samples seen " << s.samples_seen << "\n";
            } else if (line.rfind("/pad", 0) == 0) {
                std::istringstream in(line.substr(4));
                double v = 0.0, a = 0.0;
                std::size_t n = kWindowFrames;
                if (!(in >> v >> a)) throw ParameterError("usage: /pad VALENCE AROUSAL [FRAMES]");
                in >> n;
                const auto r = service.post_event(id, AffectFrames{std::vector<AffectPoint>(n, AffectPoint(v, a))});
                std::cout << "  " << r.frames_accepted << " frames, buffered " << r.session.buffered_frames << "\n";
            } else if (line.rfind("/features", 0) == 0) {
                std::istringstream in(line.substr(9));
                std::vector<double> values;
                for (double x; in >> x;) values.push_back(x);
                const auto r = service.post_event(id, FeatureFrames{{FeatureVector(std::move(values))}});
                if (r.last_frame) std::cout << "  annotation " << fmt_point(r.last_frame->annotation) << "\n";
            } else {
                const auto r = service.post_event(id, UserInput{UserInput::Kind::Reply, line});
                print_events(std::cout, r.events);
            }
        } catch (const ProtocolError& e) {
            std::cout << "  ! " << e.what() << "\n";
        } catch (const ParameterError& e) {
            std::cout << "  ! " << e.what() << "\n";
        } catch (const NotAvailableError& e) {
            std::cout << "  ! " << e.what() << "\n";
        }
    }
    const auto files = service.close(id);
    std::cout << "log saved to " << files.log.string() << "\n";
    if (files.model) std::cout << "model saved to " << files.model->string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clcoach: affect-adaptive coaching engine"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--banks", common.banks, "sentence bank file")->capture_default_str();
    app.add_option("--personas", common.personas, "persona catalogue")->capture_default_str();
    app.add_option("--instruments", common.instruments, "questionnaire instrument file")->capture_default_str();
    app.add_option("--generator", common.generator, "imagination generator (synthetic|null)")->capture_default_str();

    std::string condition = "C3", persona = "understated", log_out, plan, out, metric = "error_ex3", survey, metrics,
                csv_out, json_out, host = "127.0.0.1", data, person;
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> session_seed;
    bool quiet = false, serial = false;
    std::vector<std::string> dims, directions;
    double alpha = 0.05;
    int port = 8080;

    auto* sim = app.add_subcommand("simulate", "run one synthetic session");
    sim->add_option("--condition", condition, "C1|C2|C3")->capture_default_str();
    sim->add_option("--persona", persona, "catalogue name or persona JSON file")->capture_default_str();
    sim->add_option("--seed", seed)->capture_default_str();
    sim->add_option("--log", log_out, "write the session log here ('-' for stdout)");
    sim->add_flag("--quiet", quiet);

    auto* exp = app.add_subcommand("experiment", "run a plan of sessions and compare conditions");
    exp->add_option("--plan", plan, "plan JSON")->required()->check(CLI::ExistingFile);
    exp->add_option("--out", out, "metrics CSV (default stdout)");
    exp->add_option("--metric", metric, "metric compared across conditions")->capture_default_str();
    exp->add_flag("--serial", serial, "run sessions one after another");

    auto* ana = app.add_subcommand("analyze", "questionnaire or metrics statistics");
    ana->add_option("--survey", survey, "survey CSV")->check(CLI::ExistingFile);
    ana->add_option("--metrics", metrics, "metrics CSV from 'experiment'")->check(CLI::ExistingFile);
    ana->add_option("--dimensions", dims, "subscales to compare (comma separated or 'all')");
    ana->add_option("--direction", directions, "declared pair direction, e.g. warmth:C1<C3 (repeatable)");
    ana->add_option("--alpha", alpha)->capture_default_str();
    ana->add_option("--metric", metric, "metric column for --metrics")->capture_default_str();
    ana->add_option("--csv", csv_out, "write machine-readable results");
    ana->add_option("--json", json_out, "write machine-readable results");

    auto* srv = app.add_subcommand("serve", "run the session service");
    srv->add_option("--port", port)->capture_default_str();
    srv->add_option("--host", host)->capture_default_str();
    srv->add_option("--data", data, "storage directory (default $CLCOACH_DATA_DIR or ./clcoach-data)");

    auto* inter = app.add_subcommand("interactive", "talk to the coach in the terminal");
    inter->add_option("--condition", condition, "C1|C2|C3")->capture_default_str();
    inter->add_option("--person", person, "person id")->required();
    inter->add_option("--seed", session_seed);
    inter->add_option("--data", data, "storage directory (default $CLCOACH_DATA_DIR or ./clcoach-data)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*sim) return cmd_simulate(common, condition, persona, seed, log_out, quiet);
        if (*exp) return cmd_experiment(common, plan, out, metric, serial);
        if (*ana) return cmd_analyze(common, survey, metrics, dims, directions, alpha, csv_out, json_out, metric);
        if (*srv) return cmd_serve(common, host, port, data);
        if (*inter) return cmd_interactive(common, condition, person, session_seed, data);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "clcoach: " << e.what() << "\n";
        return kUsage;
    } catch (const ParameterError& e) {
        std::cerr << "clcoach: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "clcoach: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "clcoach: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
