#pragma once
// Coaching dialogue: a seven-state script (introduction, three positive
// psychology exercises with two items each, feedback, survey, goodbye) whose
// exercise states split into circumplex sub-states when the session adapts
// to affect.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "clcoach/affect.hpp"

namespace clcoach {

enum class SessionState { Introduction = 1, Impactful, Grateful, Accomplishments, Feedback, Survey, GoodBye };

// "S1".."S7"
std::string_view state_tag(SessionState s) noexcept;
std::string_view state_name(SessionState s) noexcept;
SessionState state_from_tag(std::string_view tag);
bool is_exercise(SessionState s) noexcept;

enum class Condition { C1, C2, C3 };

std::string_view to_string(Condition c) noexcept;
Condition condition_from_string(std::string_view s);
inline bool adapts_to_affect(Condition c) noexcept { return c != Condition::C1; }

enum class Keyword { Affirmative, Negative, Other };
std::string_view to_string(Keyword k) noexcept;

// Case-insensitive keyword spotting on token boundaries. The earliest match
// in the transcript wins; multi-word phrases are matched as a unit.
Keyword spot_keyword(std::string_view transcript);

enum class Gesture { Welcome, Question, AffectResponse, Goodbye };
std::string_view to_string(Gesture g) noexcept;
Gesture gesture_from_string(std::string_view s);

struct YesNo {
    std::string transcript;
};

struct DescriptiveDone {
    std::string transcript;
    AffectPoint summary;
};

struct UserEvent {
    std::variant<YesNo, DescriptiveDone> kind;
    Timestamp time = 0;
};

struct RobotEvent {
    enum class Kind { Utterance, Gesture };

    Kind kind = Kind::Utterance;
    std::string text;                 // utterances
    std::string bank_key;             // utterances
    Gesture gesture = Gesture::Question;  // gestures
    std::optional<Quadrant> quadrant; // set on affect utterances only

    static RobotEvent utterance(std::string text, std::string key);
    static RobotEvent affect_utterance(std::string text, std::string key, Quadrant q);
    static RobotEvent gesture_tag(Gesture g);

    bool is_affect_utterance() const noexcept { return kind == Kind::Utterance && quadrant.has_value(); }

    friend bool operator==(const RobotEvent&, const RobotEvent&) = default;
};

// Sentence dictionaries keyed "S2.Q1", "S2.NEUTRAL", "S2.PROMPT1", ...
class SentenceBank {
public:
    static constexpr std::size_t kMinUtterances = 120;

    SentenceBank() = default;
    explicit SentenceBank(std::map<std::string, std::vector<std::string>> entries);

    const std::vector<std::string>& at(const std::string& key) const;
    bool contains(const std::string& key) const { return entries_.contains(key); }
    std::size_t total() const noexcept;
    const std::map<std::string, std::vector<std::string>>& entries() const noexcept { return entries_; }

    // Every key the dialogue can reach.
    static const std::vector<std::string>& required_keys();

    // Coverage then count check; throws DataError naming what is missing.
    void validate(std::size_t min_total = kMinUtterances) const;

private:
    std::map<std::string, std::vector<std::string>> entries_;
};

std::string bank_key(SessionState s, std::string_view tag);
std::string affect_key(SessionState s, Quadrant q);

// Text format: a "clcoach-banks 1" header line, then "[KEY]" sections whose
// non-blank lines are utterances. '#' starts a comment line. Errors carry
// the source name and line number.
SentenceBank parse_banks(std::string_view text, std::string_view source = "<banks>",
                         std::size_t min_total = SentenceBank::kMinUtterances);
SentenceBank load_banks(const std::filesystem::path& path,
                        std::size_t min_total = SentenceBank::kMinUtterances);

// Stateless uniform choice from bank[key], deterministic in the seed.
const std::string& select_utterance(const SentenceBank& bank, const std::string& key, std::uint64_t seed);

// Per-key seeded streams that avoid repeating the previous choice for the
// same key. Separate keys never perturb each other's streams.
class UtteranceSelector {
public:
    explicit UtteranceSelector(std::uint64_t seed = 0) : seed_(seed) {}
    const std::string& select(const SentenceBank& bank, const std::string& key);

    friend bool operator==(const UtteranceSelector&, const UtteranceSelector&) = default;

private:
    std::uint64_t seed_;
    std::map<std::string, std::uint64_t> calls_;
    std::map<std::string, std::size_t> last_;
};

std::uint64_t stable_hash(std::string_view s) noexcept;

class DialogueSession {
public:
    DialogueSession(Condition condition, const SentenceBank& bank, std::uint64_t seed);

    // Opening welcome and readiness question. Must be called exactly once.
    std::vector<RobotEvent> start();

    // Throws ProtocolError (leaving the session unchanged) when the event
    // is not legal in the current state.
    std::vector<RobotEvent> advance(const UserEvent& event);

    Condition condition() const noexcept { return condition_; }
    SessionState state() const noexcept { return state_; }
    int item() const noexcept { return item_; }
    bool started() const noexcept { return started_; }
    bool finished() const noexcept { return finished_; }
    // Distinct states in the order first entered.
    const std::vector<SessionState>& trace() const noexcept { return trace_; }
    // Whether the current state expects a descriptive answer.
    bool awaiting_descriptive() const noexcept { return started_ && !finished_ && is_exercise(state_); }

private:
    void enter(SessionState s, std::vector<RobotEvent>& out);
    void say(const std::string& key, std::vector<RobotEvent>& out);
    void ask(const std::string& key, std::vector<RobotEvent>& out);

    Condition condition_;
    const SentenceBank* bank_;
    UtteranceSelector selector_;
    SessionState state_ = SessionState::Introduction;
    int item_ = 1;
    bool started_ = false;
    bool finished_ = false;
    std::vector<SessionState> trace_;
};

}  // namespace clcoach
