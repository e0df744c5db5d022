#include "clcoach/dialogue.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <random>
#include <sstream>

#include "clcoach/error.hpp"
#include "clcoach/expression.hpp"
#include "clcoach/persistence.hpp"

namespace clcoach {

namespace {

constexpr std::array kStates{SessionState::Introduction, SessionState::Impactful,       SessionState::Grateful,
                             SessionState::Accomplishments, SessionState::Feedback, SessionState::Survey,
                             SessionState::GoodBye};

constexpr std::array kQuadrants{Quadrant::Q1, Quadrant::Q2, Quadrant::Q3, Quadrant::Q4, Quadrant::Neutral};

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '\'') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

struct Phrase {
    std::vector<std::string> words;
    Keyword kind;
};

const std::vector<Phrase>& phrases() {
    // Longest phrases first so "of course" is tried before any single word.
    static const std::vector<Phrase> list = [] {
        std::vector<Phrase> p;
        p.push_back({{"of", "course"}, Keyword::Affirmative});
        for (const char* w : {"yes", "yeah", "yep", "ok", "fine", "aye", "definitely", "certainly", "exactly",
                              "positive", "sure"}) {
            p.push_back({{w}, Keyword::Affirmative});
        }
        for (const char* w : {"no", "nope", "na", "never", "nah", "nay"}) p.push_back({{w}, Keyword::Negative});
        return p;
    }();
    return list;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view state_tag(SessionState s) noexcept {
    switch (s) {
        case SessionState::Introduction: return "S1";
        case SessionState::Impactful: return "S2";
        case SessionState::Grateful: return "S3";
        case SessionState::Accomplishments: return "S4";
        case SessionState::Feedback: return "S5";
        case SessionState::Survey: return "S6";
        case SessionState::GoodBye: return "S7";
    }
    return "S?";
}

std::string_view state_name(SessionState s) noexcept {
    switch (s) {
        case SessionState::Introduction: return "Introduction";
        case SessionState::Impactful: return "Impactful";
        case SessionState::Grateful: return "Grateful";
        case SessionState::Accomplishments: return "Accomplishments";
        case SessionState::Feedback: return "Feedback";
        case SessionState::Survey: return "Survey";
        case SessionState::GoodBye: return "GoodBye";
    }
    return "?";
}

SessionState state_from_tag(std::string_view tag) {
    for (auto s : kStates) {
        if (state_tag(s) == tag) return s;
    }
    throw ParameterError("unknown dialogue state " + std::string(tag));
}

bool is_exercise(SessionState s) noexcept {
    return s == SessionState::Impactful || s == SessionState::Grateful || s == SessionState::Accomplishments;
}

std::string_view to_string(Condition c) noexcept {
    switch (c) {
        case Condition::C1: return "C1";
        case Condition::C2: return "C2";
        case Condition::C3: return "C3";
    }
    return "C?";
}

Condition condition_from_string(std::string_view s) {
    if (s == "C1" || s == "c1") return Condition::C1;
    if (s == "C2" || s == "c2") return Condition::C2;
    if (s == "C3" || s == "c3") return Condition::C3;
    throw ParameterError("unknown condition '" + std::string(s) + "' (expected C1, C2 or C3)");
}

std::string_view to_string(Keyword k) noexcept {
    switch (k) {
        case Keyword::Affirmative: return "affirmative";
        case Keyword::Negative: return "negative";
        case Keyword::Other: return "other";
    }
    return "?";
}

Keyword spot_keyword(std::string_view transcript) {
    const auto tokens = tokenize(transcript);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        for (const auto& p : phrases()) {
            if (i + p.words.size() > tokens.size()) continue;
            if (std::equal(p.words.begin(), p.words.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
                return p.kind;
            }
        }
    }
    return Keyword::Other;
}

std::string_view to_string(Gesture g) noexcept {
    switch (g) {
        case Gesture::Welcome: return "welcome";
        case Gesture::Question: return "question";
        case Gesture::AffectResponse: return "affect_response";
        case Gesture::Goodbye: return "goodbye";
    }
    return "?";
}

Gesture gesture_from_string(std::string_view s) {
    for (auto g : {Gesture::Welcome, Gesture::Question, Gesture::AffectResponse, Gesture::Goodbye}) {
        if (to_string(g) == s) return g;
    }
    throw ParameterError("unknown gesture " + std::string(s));
}

RobotEvent RobotEvent::utterance(std::string text, std::string key) {
    RobotEvent e;
    e.kind = Kind::Utterance;
    e.text = std::move(text);
    e.bank_key = std::move(key);
    return e;
}

RobotEvent RobotEvent::affect_utterance(std::string text, std::string key, Quadrant q) {
    RobotEvent e = utterance(std::move(text), std::move(key));
    e.quadrant = q;
    return e;
}

RobotEvent RobotEvent::gesture_tag(Gesture g) {
    RobotEvent e;
    e.kind = Kind::Gesture;
    e.gesture = g;
    return e;
}

std::string bank_key(SessionState s, std::string_view tag) {
    return std::string(state_tag(s)) + "." + std::string(tag);
}

std::string affect_key(SessionState s, Quadrant q) { return bank_key(s, to_string(q)); }

SentenceBank::SentenceBank(std::map<std::string, std::vector<std::string>> entries) : entries_(std::move(entries)) {}

const std::vector<std::string>& SentenceBank::at(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end() || it->second.empty()) throw DataError("sentence bank has no entries for " + key);
    return it->second;
}

std::size_t SentenceBank::total() const noexcept {
    std::size_t n = 0;
    for (const auto& [k, v] : entries_) n += v.size();
    return n;
}

const std::vector<std::string>& SentenceBank::required_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k{"S1.WELCOME", "S1.ASK", "S1.RETRY"};
        for (auto s : {SessionState::Impactful, SessionState::Grateful, SessionState::Accomplishments}) {
            k.push_back(bank_key(s, "PROMPT1"));
            k.push_back(bank_key(s, "PROMPT2"));
            for (auto q : kQuadrants) k.push_back(affect_key(s, q));
        }
        for (const char* x : {"S5.ASK", "S5.ACK_YES", "S5.ACK_NO", "S6.ASK", "S6.WAIT", "S7.GOODBYE"}) k.emplace_back(x);
        return k;
    }();
    return keys;
}

void SentenceBank::validate(std::size_t min_total) const {
    std::vector<std::string> missing;
    for (const auto& k : required_keys()) {
        const auto it = entries_.find(k);
        if (it == entries_.end() || it->second.empty()) missing.push_back(k);
    }
    if (!missing.empty()) {
        std::string msg = "sentence bank is missing keys:";
        for (const auto& k : missing) msg += " " + k;
        throw DataError(msg);
    }
    if (total() < min_total) {
        throw DataError("sentence bank holds " + std::to_string(total()) + " utterances, at least " +
                        std::to_string(min_total) + " required");
    }
}

SentenceBank parse_banks(std::string_view text, std::string_view source, std::size_t min_total) {
    const auto& known = SentenceBank::required_keys();
    std::map<std::string, std::vector<std::string>> entries;
    std::string current;
    bool have_header = false;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    auto fail = [&](const std::string& why) -> DataError {
        return DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (!have_header) {
            std::istringstream hs(line);
            std::string magic;
            int version = 0;
            if (!(hs >> magic >> version) || magic != "clcoach-banks") {
                throw fail("expected header 'clcoach-banks 1'");
            }
            if (version != 1) throw VersionError(std::string(source) + ": unsupported bank version " + std::to_string(version));
            have_header = true;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) throw fail("malformed section header");
            current = line.substr(1, line.size() - 2);
            if (std::find(known.begin(), known.end(), current) == known.end()) throw fail("unknown key " + current);
            if (entries.contains(current)) throw fail("duplicate section " + current);
            entries[current];
            continue;
        }
        if (current.empty()) throw fail("utterance outside any section");
        entries[current].push_back(line);
    }
    if (!have_header) throw DataError(std::string(source) + ": missing 'clcoach-banks 1' header");
    SentenceBank bank(std::move(entries));
    bank.validate(min_total);
    return bank;
}

SentenceBank load_banks(const std::filesystem::path& path, std::size_t min_total) {
    return parse_banks(read_file(path), path.string(), min_total);
}

std::uint64_t stable_hash(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

const std::string& select_utterance(const SentenceBank& bank, const std::string& key, std::uint64_t seed) {
    const auto& list = bank.at(key);
    std::mt19937_64 rng(mix_seed(seed, stable_hash(key)));
    std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
    return list[pick(rng)];
}

const std::string& UtteranceSelector::select(const SentenceBank& bank, const std::string& key) {
    const auto& list = bank.at(key);
    const std::uint64_t call = calls_[key]++;
    std::mt19937_64 rng(mix_seed(mix_seed(seed_, stable_hash(key)), call));
    std::size_t idx = 0;
    const auto last = last_.find(key);
    if (list.size() > 1 && last != last_.end()) {
        std::uniform_int_distribution<std::size_t> pick(0, list.size() - 2);
        idx = pick(rng);
        if (idx >= last->second) ++idx;
    } else if (list.size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
        idx = pick(rng);
    }
    last_[key] = idx;
    return list[idx];
}

DialogueSession::DialogueSession(Condition condition, const SentenceBank& bank, std::uint64_t seed)
    : condition_(condition), bank_(&bank), selector_(seed) {}

void DialogueSession::say(const std::string& key, std::vector<RobotEvent>& out) {
    out.push_back(RobotEvent::utterance(selector_.select(*bank_, key), key));
}

void DialogueSession::ask(const std::string& key, std::vector<RobotEvent>& out) {
    out.push_back(RobotEvent::gesture_tag(Gesture::Question));
    say(key, out);
}

void DialogueSession::enter(SessionState s, std::vector<RobotEvent>& out) {
    state_ = s;
    item_ = 1;
    trace_.push_back(s);
    switch (s) {
        case SessionState::Introduction:
            out.push_back(RobotEvent::gesture_tag(Gesture::Welcome));
            say("S1.WELCOME", out);
            ask("S1.ASK", out);
            break;
        case SessionState::Impactful:
        case SessionState::Grateful:
        case SessionState::Accomplishments:
            ask(bank_key(s, "PROMPT1"), out);
            break;
        case SessionState::Feedback:
            ask("S5.ASK", out);
            break;
        case SessionState::Survey:
            ask("S6.ASK", out);
            break;
        case SessionState::GoodBye:
            say("S7.GOODBYE", out);
            out.push_back(RobotEvent::gesture_tag(Gesture::Goodbye));
            finished_ = true;
            break;
    }
}

std::vector<RobotEvent> DialogueSession::start() {
    if (started_) throw ProtocolError("session already started");
    started_ = true;
    std::vector<RobotEvent> out;
    enter(SessionState::Introduction, out);
    return out;
}

std::vector<RobotEvent> DialogueSession::advance(const UserEvent& event) {
    if (!started_) throw ProtocolError("session not started");
    if (finished_) throw ProtocolError("session already finished");
    const bool descriptive = std::holds_alternative<DescriptiveDone>(event.kind);
    if (descriptive != is_exercise(state_)) {
        throw ProtocolError(std::string(descriptive ? "descriptive answer" : "yes/no answer") + " not expected in " +
                            std::string(state_tag(state_)));
    }

    std::vector<RobotEvent> out;
    if (descriptive) {
        const auto& d = std::get<DescriptiveDone>(event.kind);
        if (adapts_to_affect(condition_)) {
            const Quadrant q = classify_quadrant(d.summary);
            const auto key = affect_key(state_, q);
            out.push_back(RobotEvent::gesture_tag(Gesture::AffectResponse));
            out.push_back(RobotEvent::affect_utterance(selector_.select(*bank_, key), key, q));
        }
        if (item_ == 1) {
            item_ = 2;
            ask(bank_key(state_, "PROMPT2"), out);
        } else {
            enter(static_cast<SessionState>(static_cast<int>(state_) + 1), out);
        }
        return out;
    }

    const Keyword k = spot_keyword(std::get<YesNo>(event.kind).transcript);
    switch (state_) {
        case SessionState::Introduction:
            if (k == Keyword::Affirmative) {
                enter(SessionState::Impactful, out);
            } else {
                ask("S1.RETRY", out);
            }
            break;
        case SessionState::Feedback:
            say(k == Keyword::Negative ? "S5.ACK_NO" : "S5.ACK_YES", out);
            enter(SessionState::Survey, out);
            break;
        case SessionState::Survey:
            if (k == Keyword::Affirmative) {
                enter(SessionState::GoodBye, out);
            } else {
                say("S6.WAIT", out);
            }
            break;
        default:
            break;
    }
    return out;
}

}  // namespace clcoach
