#pragma once
// Live sessions: the same dialogue and perception pipeline as the simulator,
// driven by posted events instead of a persona. LiveSession is the single-
// threaded engine (used directly by the interactive terminal); SessionService
// owns many of them, serialises events per session and persists results under
//   <data>/sessions/<id>.log
//   <data>/models/<person>.model

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "clcoach/dialogue.hpp"
#include "clcoach/gdm.hpp"
#include "clcoach/imagination.hpp"
#include "clcoach/pipeline.hpp"
#include "clcoach/session_log.hpp"

namespace clcoach {

struct LiveConfig {
    const SentenceBank* bank = nullptr;  // required
    GridSpec grid;
    std::string generator = "synthetic";
    double generator_noise = 0.02;
    std::size_t feature_dim = kDefaultFeatureDim;
    GwrParams episodic = GwrParams::episodic();
    GwrParams semantic = GwrParams::semantic();
    Exec exec = Exec::Auto;
};

struct FrameAck {
    AffectPoint annotation;
    bool buffered = false;  // frames only count while a descriptive answer is expected
    std::size_t buffered_frames = 0;
};

struct MemorySnapshot {
    std::vector<std::array<double, 2>> episodic_positions;
    std::vector<std::optional<AffectPoint>> episodic_labels;
    std::size_t episodic_nodes = 0;
    std::size_t episodic_edges = 0;
    std::size_t semantic_nodes = 0;
    std::size_t semantic_edges = 0;
    std::uint64_t samples_seen = 0;

    nlohmann::json to_json() const;
};

// Letters, digits, '_', '-', '.'; not starting with '.'. Throws ParameterError.
void validate_person_id(const std::string& person);

GdmPersonalModel fresh_model(const std::string& person, const LiveConfig& config);

class LiveSession {
public:
    // `model` must be present exactly under C3.
    LiveSession(std::string id, Condition condition, std::string person, std::uint64_t seed, const LiveConfig& config,
                std::optional<GdmPersonalModel> model = std::nullopt);

    // Opening events; called once.
    std::vector<RobotEvent> start();

    // Self-reported affect (the console's pad): the point is the annotation,
    // its canonical expression is the feature vector.
    FrameAck post_affect(const AffectPoint& p);
    // Raw features, annotated by the generic annotator.
    FrameAck post_features(const FeatureVector& f);

    std::vector<RobotEvent> post_yes_no(const std::string& transcript);
    // Closes the buffered answer, computes its summary and advances.
    std::vector<RobotEvent> post_descriptive(const std::string& transcript);
    // Whichever of the two the current state expects.
    std::vector<RobotEvent> post_reply(const std::string& transcript);

    MemorySnapshot snapshot() const;

    void close();
    bool closed() const noexcept { return closed_; }

    const std::string& id() const noexcept { return id_; }
    Condition condition() const noexcept { return condition_; }
    const std::string& person() const noexcept { return person_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const DialogueSession& dialogue() const noexcept { return dialogue_; }
    const SessionLog& log() const noexcept { return log_; }
    const std::optional<GdmPersonalModel>& model() const noexcept { return model_; }
    std::optional<AffectPoint> last_summary() const noexcept { return last_summary_; }
    std::size_t buffered_frames() const noexcept { return buffer_.size(); }

private:
    void check_open() const;
    FrameAck ingest(const FeatureVector& f, const std::optional<AffectPoint>& annotation);
    std::vector<RobotEvent> advance(const UserEvent& e);

    std::string id_;
    Condition condition_;
    std::string person_;
    std::uint64_t seed_;
    const LiveConfig* config_;
    DialogueSession dialogue_;
    std::optional<GdmPersonalModel> model_;
    std::unique_ptr<Generator> generator_;
    LinearAnnotator annotator_;
    ExpressionModel canonical_;
    ResponseBuffer buffer_;
    SessionLog log_;
    Timestamp t_ = 0;
    std::size_t responses_ = 0;
    std::optional<AffectPoint> last_summary_;
    bool closed_ = false;
};

// ---- multi-session service ----

struct ServiceConfig {
    std::filesystem::path data_dir;
    LiveConfig live;
};

// $CLCOACH_DATA_DIR if set, else `fallback`.
std::filesystem::path data_dir_from_env(const std::filesystem::path& fallback);

struct SessionInfo {
    std::string id;
    Condition condition = Condition::C1;
    std::string person;
    std::uint64_t seed = 0;
    std::int64_t created_ms = 0;  // wall clock, informational
    SessionState state = SessionState::Introduction;
    int item = 1;
    bool awaiting_descriptive = false;
    bool finished = false;
    bool closed = false;
    bool has_model = false;
    std::size_t buffered_frames = 0;

    nlohmann::json to_json() const;
};

struct UserInput {
    enum class Kind { YesNo, Descriptive, Reply };
    Kind kind = Kind::Reply;
    std::string transcript;
};

struct AffectFrames {
    std::vector<AffectPoint> frames;
};

struct FeatureFrames {
    std::vector<FeatureVector> frames;
};

using ServiceEvent = std::variant<UserInput, AffectFrames, FeatureFrames>;

// Parses the JSON body of an event post. Throws ParameterError.
ServiceEvent service_event_from_json(const nlohmann::json& j);

struct PostResult {
    std::vector<RobotEvent> events;
    std::optional<FrameAck> last_frame;
    std::size_t frames_accepted = 0;
    SessionInfo session;
};

struct StreamItem {
    std::size_t index = 0;  // position in the session's robot-event stream
    nlohmann::json event;
};

struct Created {
    SessionInfo session;
    std::vector<RobotEvent> events;
};

struct ClosedFiles {
    std::filesystem::path log;
    std::optional<std::filesystem::path> model;
};

class SessionService {
public:
    explicit SessionService(ServiceConfig config);
    ~SessionService();

    // C3 loads <data>/models/<person>.model when it exists, else starts fresh.
    Created create_session(Condition condition, const std::string& person, std::optional<std::uint64_t> seed = {});
    PostResult post_event(const std::string& id, const ServiceEvent& event);
    SessionInfo info(const std::string& id) const;
    std::vector<SessionInfo> list() const;
    // C3 only; NotAvailableError otherwise.
    MemorySnapshot memory_snapshot(const std::string& id) const;
    std::string log_text(const std::string& id) const;
    ClosedFiles close(const std::string& id);

    // Robot events from `from` onwards, waiting up to `timeout` for at least
    // one. `ended` is set when the session is closed and everything was returned.
    std::vector<StreamItem> wait_events(const std::string& id, std::size_t from, std::chrono::milliseconds timeout,
                                        bool& ended) const;

    const ServiceConfig& config() const noexcept { return config_; }
    std::filesystem::path log_path(const std::string& id) const;
    std::filesystem::path model_path(const std::string& person) const;

    // Unblocks stream waiters (used on shutdown).
    void shutdown();

private:
    struct Entry;
    std::shared_ptr<Entry> find(const std::string& id) const;
    static SessionInfo info_of(const Entry& e);

    ServiceConfig config_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t next_id_ = 1;
    bool stopping_ = false;
};

}  // namespace clcoach
