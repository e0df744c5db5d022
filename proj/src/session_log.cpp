#include "clcoach/session_log.hpp"

#include <sstream>

#include "clcoach/error.hpp"

namespace clcoach {

using nlohmann::json;

void SessionLog::append(json record) {
    const auto t = record.at("t").get<Timestamp>();
    if (!records_.empty() && t < records_.back().at("t").get<Timestamp>()) {
        throw OrderingError("log record time goes backwards");
    }
    json stamped = {{"seq", records_.size()}};
    stamped.update(record);
    records_.push_back(std::move(stamped));
}

std::string SessionLog::to_text() const {
    std::string out;
    for (const auto& r : records_) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

SessionLog SessionLog::parse(std::string_view text) {
    SessionLog log;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("session log line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("seq") || !j.contains("t") || !j.contains("type")) {
            throw DataError("session log line " + std::to_string(line_no) + ": missing seq/t/type");
        }
        if (line_no == 1) {
            if (j.at("type") != "meta" || j.value("schema", "") != "clcoach-session-log") {
                throw DataError("session log does not start with a meta record");
            }
            if (j.value("version", -1) != kSessionLogVersion) {
                throw VersionError("unsupported session log version " + j.at("version").dump());
            }
        }
        log.records_.push_back(std::move(j));
    }
    if (log.records_.empty()) throw DataError("empty session log");
    return log;
}

json affect_json(const AffectPoint& p) { return json::array({p.valence(), p.arousal()}); }

AffectPoint affect_from_json(const json& j) { return AffectPoint(j.at(0).get<double>(), j.at(1).get<double>()); }

json meta_record(const SessionMeta& m) {
    return {{"t", 0},
            {"type", "meta"},
            {"schema", "clcoach-session-log"},
            {"version", kSessionLogVersion},
            {"condition", std::string(to_string(m.condition))},
            {"person", m.person},
            {"seed", m.seed},
            {"dialogue_seed", m.dialogue_seed},
            {"source", m.source}};
}

SessionMeta meta_from_record(const json& j) {
    SessionMeta m;
    m.condition = condition_from_string(j.at("condition").get<std::string>());
    m.person = j.at("person").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dialogue_seed = j.at("dialogue_seed").get<std::uint64_t>();
    m.source = j.value("source", "");
    return m;
}

json robot_event_json(const RobotEvent& e) {
    json j;
    if (e.kind == RobotEvent::Kind::Gesture) {
        j["kind"] = "gesture";
        j["gesture"] = std::string(to_string(e.gesture));
    } else {
        j["kind"] = "utterance";
        j["key"] = e.bank_key;
        j["text"] = e.text;
        if (e.quadrant) j["quadrant"] = std::string(to_string(*e.quadrant));
    }
    return j;
}

json robot_record(Timestamp t, SessionState state, const RobotEvent& e) {
    json j = {{"t", t}, {"type", "robot"}, {"state", std::string(state_tag(state))}};
    j.update(robot_event_json(e));
    return j;
}

RobotEvent robot_event_from_record(const json& j) {
    if (j.at("kind") == "gesture") return RobotEvent::gesture_tag(gesture_from_string(j.at("gesture").get<std::string>()));
    auto text = j.at("text").get<std::string>();
    auto key = j.at("key").get<std::string>();
    if (j.contains("quadrant")) {
        return RobotEvent::affect_utterance(std::move(text), std::move(key),
                                            quadrant_from_string(j.at("quadrant").get<std::string>()));
    }
    return RobotEvent::utterance(std::move(text), std::move(key));
}

json user_record(Timestamp t, SessionState state, const UserEvent& e) {
    json j = {{"t", t}, {"type", "user"}, {"state", std::string(state_tag(state))}};
    if (const auto* y = std::get_if<YesNo>(&e.kind)) {
        j["event"] = "yes_no";
        j["transcript"] = y->transcript;
        j["keyword"] = std::string(to_string(spot_keyword(y->transcript)));
    } else {
        const auto& d = std::get<DescriptiveDone>(e.kind);
        j["event"] = "descriptive";
        j["transcript"] = d.transcript;
        j["summary"] = affect_json(d.summary);
    }
    return j;
}

UserEvent user_event_from_record(const json& j) {
    UserEvent e;
    e.time = j.at("t").get<Timestamp>();
    if (j.at("event") == "yes_no") {
        e.kind = YesNo{j.at("transcript").get<std::string>()};
    } else {
        e.kind = DescriptiveDone{j.at("transcript").get<std::string>(), affect_from_json(j.at("summary"))};
    }
    return e;
}

json learn_record(Timestamp t, const LearnReport& r, std::uint64_t samples_seen) {
    return {{"t", t},
            {"type", "learn"},
            {"samples", r.samples},
            {"episodic_nodes", r.episodic_nodes},
            {"semantic_nodes", r.semantic_nodes},
            {"consolidated", r.consolidated},
            {"semantic_steps", r.semantic_steps},
            {"samples_seen", samples_seen}};
}

LogCheck check_session_log(const SessionLog& log) {
    LogCheck check;
    auto problem = [&](std::string s) { check.problems.push_back(std::move(s)); };
    const auto& recs = log.records();
    if (recs.empty()) {
        problem("log is empty");
        return check;
    }
    SessionMeta meta;
    try {
        if (recs.front().at("type") != "meta") throw DataError("first record is not meta");
        if (recs.front().value("schema", "") != "clcoach-session-log") throw DataError("wrong schema");
        if (recs.front().value("version", -1) != kSessionLogVersion) throw DataError("wrong version");
        meta = meta_from_record(recs.front());
    } catch (const std::exception& e) {
        problem(std::string("bad meta record: ") + e.what());
        return check;
    }

    std::vector<std::string> entered;
    std::optional<AffectPoint> pending_summary;  // last descriptive answer awaiting its affect utterance
    std::size_t descriptive = 0;
    std::size_t affect_utterances = 0;
    bool ended = false;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        try {
            if (r.at("seq").get<std::size_t>() != i) problem("record " + std::to_string(i) + " has wrong seq");
            if (i > 0 && r.at("t").get<Timestamp>() < recs[i - 1].at("t").get<Timestamp>()) {
                problem("record " + std::to_string(i) + " goes back in time");
            }
            const auto type = r.at("type").get<std::string>();
            if (type == "robot") {
                const auto state = r.at("state").get<std::string>();
                if (entered.empty() || entered.back() != state) entered.push_back(state);
                const auto e = robot_event_from_record(r);
                if (e.kind == RobotEvent::Kind::Gesture && e.gesture == Gesture::AffectResponse &&
                    meta.condition == Condition::C1) {
                    problem("affect_response gesture under C1");
                }
                if (e.is_affect_utterance()) {
                    ++affect_utterances;
                    if (meta.condition == Condition::C1) problem("affect utterance under C1");
                    if (!pending_summary) {
                        problem("affect utterance without a preceding descriptive answer");
                    } else if (classify_quadrant(*pending_summary) != *e.quadrant) {
                        problem("affect utterance quadrant disagrees with the answer summary");
                    }
                    pending_summary.reset();
                }
            } else if (type == "user") {
                if (r.at("event") == "descriptive") {
                    ++descriptive;
                    pending_summary = affect_from_json(r.at("summary"));
                }
            } else if (type == "end") {
                ended = true;
            } else if (type != "meta" && type != "frames" && type != "learn" && type != "summary") {
                problem("unknown record type " + type);
            }
        } catch (const std::exception& e) {
            problem("record " + std::to_string(i) + " malformed: " + e.what());
        }
    }

    static const std::vector<std::string> order{"S1", "S2", "S3", "S4", "S5", "S6", "S7"};
    if (entered.size() > order.size() || !std::equal(entered.begin(), entered.end(), order.begin())) {
        std::string seen;
        for (const auto& s : entered) seen += s + " ";
        problem("states not entered in order S1..S7: " + seen);
    }
    if (ended && entered.size() != order.size()) problem("session ended before reaching S7");
    const std::size_t expected = meta.condition == Condition::C1 ? 0 : descriptive;
    if (affect_utterances != expected) {
        problem("expected " + std::to_string(expected) + " affect utterances, found " +
                std::to_string(affect_utterances));
    }
    return check;
}

std::string replay_mismatch(const SessionLog& log, const SentenceBank& bank) {
    const auto& recs = log.records();
    if (recs.empty()) return "empty log";
    const auto meta = meta_from_record(recs.front());
    DialogueSession session(meta.condition, bank, meta.dialogue_seed);
    std::vector<RobotEvent> produced = session.start();
    std::vector<RobotEvent> logged;
    for (const auto& r : recs) {
        const auto type = r.at("type").get<std::string>();
        if (type == "robot") {
            logged.push_back(robot_event_from_record(r));
        } else if (type == "user") {
            try {
                auto more = session.advance(user_event_from_record(r));
                produced.insert(produced.end(), more.begin(), more.end());
            } catch (const ProtocolError& e) {
                return std::string("replay rejected a logged event: ") + e.what();
            }
        }
    }
    if (produced.size() != logged.size()) {
        return "replay produced " + std::to_string(produced.size()) + " robot events, log has " +
               std::to_string(logged.size());
    }
    for (std::size_t i = 0; i < produced.size(); ++i) {
        if (!(produced[i] == logged[i])) return "robot event " + std::to_string(i) + " differs on replay";
    }
    return {};
}

}  // namespace clcoach
