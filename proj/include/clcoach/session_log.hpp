#pragma once
// Append-only session log, one JSON object per line.
//
// Every record has "seq" (0, 1, 2, ...), "t" (logical frame clock,
// non-decreasing) and "type", one of:
//   meta     schema "clcoach-session-log", version, condition, person,
//            seed, dialogue_seed, source
//   robot    state, kind ("utterance" with key/text[/quadrant] or
//            "gesture" with gesture)
//   user     state, event ("yes_no" with transcript/keyword, or
//            "descriptive" with transcript/summary)
//   frames   state, item, count, annotator_mean[, true_mean]
//   learn    samples, episodic_nodes, semantic_nodes, consolidated,
//            semantic_steps, samples_seen
//   summary  state, item, summary, quadrant, source
//   end      state
// Affect points are written as [valence, arousal].

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "clcoach/dialogue.hpp"
#include "clcoach/gdm.hpp"

namespace clcoach {

inline constexpr int kSessionLogVersion = 1;

class SessionLog {
public:
    // Stamps "seq" and appends. Throws OrderingError if t goes backwards.
    void append(nlohmann::json record);

    const std::vector<nlohmann::json>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    std::string to_text() const;

    // Throws DataError (with line number) or VersionError.
    static SessionLog parse(std::string_view text);

    friend bool operator==(const SessionLog&, const SessionLog&) = default;

private:
    std::vector<nlohmann::json> records_;
};

struct SessionMeta {
    Condition condition = Condition::C1;
    std::string person;
    std::uint64_t seed = 0;
    std::uint64_t dialogue_seed = 0;
    std::string source;  // "simulator", "service", ...
};

nlohmann::json meta_record(const SessionMeta& meta);
SessionMeta meta_from_record(const nlohmann::json& j);

nlohmann::json robot_record(Timestamp t, SessionState state, const RobotEvent& e);
RobotEvent robot_event_from_record(const nlohmann::json& j);
nlohmann::json user_record(Timestamp t, SessionState state, const UserEvent& e);
UserEvent user_event_from_record(const nlohmann::json& j);
nlohmann::json learn_record(Timestamp t, const LearnReport& r, std::uint64_t samples_seen);
nlohmann::json affect_json(const AffectPoint& p);
AffectPoint affect_from_json(const nlohmann::json& j);

// Robot events to JSON without log bookkeeping (used by the service API).
nlohmann::json robot_event_json(const RobotEvent& e);

struct LogCheck {
    std::vector<std::string> problems;
    bool ok() const noexcept { return problems.empty(); }
};

// Schema plus dialogue invariants: states entered in order S1..S7 (a
// complete session ends at S7), no affect output under C1, exactly one
// affect utterance per descriptive answer otherwise, and each one's
// quadrant equal to the classification of that answer's summary.
LogCheck check_session_log(const SessionLog& log);

// Feeds the logged user events through a fresh dialogue and compares the
// robot events. Returns an empty string on success, else the first mismatch.
std::string replay_mismatch(const SessionLog& log, const SentenceBank& bank);

}  // namespace clcoach
