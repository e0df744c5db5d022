#include "clcoach/service.hpp"

#include <cstdlib>
#include <random>

#include "clcoach/error.hpp"
#include "clcoach/persistence.hpp"

namespace clcoach {

using nlohmann::json;

json MemorySnapshot::to_json() const {
    json pos = json::array();
    for (std::size_t i = 0; i < episodic_positions.size(); ++i) {
        json node = {{"x", episodic_positions[i][0]}, {"y", episodic_positions[i][1]}};
        node["label"] = episodic_labels[i] ? affect_json(*episodic_labels[i]) : json(nullptr);
        pos.push_back(std::move(node));
    }
    return {{"episodic", {{"nodes", episodic_nodes}, {"edges", episodic_edges}, {"positions", pos}}},
            {"semantic", {{"nodes", semantic_nodes}, {"edges", semantic_edges}}},
            {"samples_seen", samples_seen}};
}

void validate_person_id(const std::string& person) {
    if (person.empty() || person.size() > 64 || person.front() == '.') {
        throw ParameterError("invalid person id '" + person + "'");
    }
    for (const char c : person) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                        c == '-' || c == '.';
        if (!ok) throw ParameterError("invalid person id '" + person + "'");
    }
}

GdmPersonalModel fresh_model(const std::string& person, const LiveConfig& config) {
    const auto canonical = ExpressionModel::canonical(config.feature_dim);
    return GdmPersonalModel::create(person, config.feature_dim, canonical.express(AffectPoint(0.5, 0.5)),
                                    canonical.express(AffectPoint(-0.5, -0.5)), config.episodic, config.semantic);
}

// ---- LiveSession ----

LiveSession::LiveSession(std::string id, Condition condition, std::string person, std::uint64_t seed,
                         const LiveConfig& config, std::optional<GdmPersonalModel> model)
    : id_(std::move(id)),
      condition_(condition),
      person_(std::move(person)),
      seed_(seed),
      config_(&config),
      dialogue_(condition, *config.bank, mix_seed(seed, stable_hash("dialogue"))),
      model_(std::move(model)),
      annotator_(ExpressionModel::canonical(config.feature_dim)),
      canonical_(ExpressionModel::canonical(config.feature_dim)) {
    validate_person_id(person_);
    config.grid.validate();
    if ((condition_ == Condition::C3) != model_.has_value()) {
        throw ParameterError("a personal model is attached exactly under C3");
    }
    if (model_) {
        if (model_->dim() != config.feature_dim) throw DimensionError("personal model has the wrong feature size");
        model_->set_exec(config.exec);
        generator_ = make_generator(config.generator, GeneratorConfig{canonical_, config.generator_noise,
                                                                      mix_seed(seed, stable_hash("imagination"))});
    }
    log_.append(meta_record({condition_, person_, seed_, mix_seed(seed, stable_hash("dialogue")), "live"}));
}

void LiveSession::check_open() const {
    if (closed_) throw SessionClosedError("session " + id_ + " is closed");
}

std::vector<RobotEvent> LiveSession::start() {
    check_open();
    auto events = dialogue_.start();
    for (const auto& e : events) log_.append(robot_record(t_, dialogue_.state(), e));
    return events;
}

FrameAck LiveSession::ingest(const FeatureVector& f, const std::optional<AffectPoint>& annotation) {
    check_open();
    if (!dialogue_.started()) throw ProtocolError("session has not started");
    const Timestamp t = t_;
    FrameAck ack;
    if (dialogue_.awaiting_descriptive()) {
        if (!buffer_.is_open()) buffer_.open();
        ack.annotation = annotation ? ingest_annotated(buffer_, t, f, *annotation) : ingest_frame(buffer_, t, f, annotator_);
        ack.buffered = true;
    } else {
        ack.annotation = annotation ? *annotation : annotator_.annotate(f);
    }
    ++t_;
    ack.buffered_frames = buffer_.size();
    return ack;
}

FrameAck LiveSession::post_affect(const AffectPoint& p) { return ingest(canonical_.express(p), p); }

FrameAck LiveSession::post_features(const FeatureVector& f) {
    if (f.dim() != config_->feature_dim) {
        throw DimensionError("feature frame has " + std::to_string(f.dim()) + " values, expected " +
                             std::to_string(config_->feature_dim));
    }
    return ingest(f, std::nullopt);
}

std::vector<RobotEvent> LiveSession::advance(const UserEvent& e) {
    const auto before = dialogue_.state();
    auto events = dialogue_.advance(e);
    log_.append(user_record(t_, before, e));
    for (const auto& r : events) log_.append(robot_record(t_, dialogue_.state(), r));
    if (dialogue_.finished()) log_.append({{"t", t_}, {"type", "end"}, {"state", std::string(state_tag(dialogue_.state()))}});
    return events;
}

std::vector<RobotEvent> LiveSession::post_yes_no(const std::string& transcript) {
    check_open();
    if (!dialogue_.started() || dialogue_.finished() || dialogue_.awaiting_descriptive()) {
        throw ProtocolError("a yes/no answer is not expected in " + std::string(state_tag(dialogue_.state())));
    }
    return advance(UserEvent{YesNo{transcript}, t_});
}

std::vector<RobotEvent> LiveSession::post_descriptive(const std::string& transcript) {
    check_open();
    if (!dialogue_.awaiting_descriptive()) {
        throw ProtocolError("a descriptive answer is not expected in " + std::string(state_tag(dialogue_.state())));
    }
    const auto state = dialogue_.state();
    const int item = dialogue_.item();
    const std::string tag(state_tag(state));

    AffectPoint summary;
    std::string source = "none";
    if (buffer_.size() > 0) {
        PersonalisationSetup setup{generator_.get(), config_->grid, kSampledFrames, config_->exec};
        const auto outcome = close_response(buffer_, condition_, model_ ? &*model_ : nullptr, setup,
                                            mix_seed(seed_, 0x5A17 + responses_));
        summary = outcome.summary;
        source = outcome.learn ? "personal" : "annotator";
        log_.append({{"t", t_},
                     {"type", "frames"},
                     {"state", tag},
                     {"item", item},
                     {"count", outcome.frames},
                     {"annotator_mean", affect_json(outcome.annotator_summary)}});
        if (outcome.learn) log_.append(learn_record(t_, *outcome.learn, model_->samples_seen()));
    } else {
        buffer_.discard();
    }
    ++responses_;
    log_.append({{"t", t_},
                 {"type", "summary"},
                 {"state", tag},
                 {"item", item},
                 {"summary", affect_json(summary)},
                 {"quadrant", std::string(to_string(classify_quadrant(summary)))},
                 {"source", source}});
    last_summary_ = summary;
    return advance(UserEvent{DescriptiveDone{transcript, summary}, t_});
}

std::vector<RobotEvent> LiveSession::post_reply(const std::string& transcript) {
    return dialogue_.awaiting_descriptive() ? post_descriptive(transcript) : post_yes_no(transcript);
}

MemorySnapshot LiveSession::snapshot() const {
    if (!model_) throw NotAvailableError("memory snapshot is only available under C3");
    const auto& ep = model_->episodic();
    const auto dim = static_cast<Eigen::Index>(ep.dim());
    std::mt19937_64 rng(stable_hash(id_));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    Eigen::MatrixXd proj(2, dim);
    for (Eigen::Index r = 0; r < 2; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) proj(r, c) = normal(rng);
    }
    MemorySnapshot s;
    for (const auto& n : ep.neurons()) {
        const auto v = n.weight.values();
        const Eigen::Map<const Eigen::VectorXd> w(v.data(), static_cast<Eigen::Index>(v.size()));
        const Eigen::Vector2d p = proj * w;
        s.episodic_positions.push_back({p(0), p(1)});
        s.episodic_labels.push_back(n.label_mean);
    }
    s.episodic_nodes = ep.size();
    s.episodic_edges = ep.edges().size();
    s.semantic_nodes = model_->semantic().size();
    s.semantic_edges = model_->semantic().edges().size();
    s.samples_seen = model_->samples_seen();
    return s;
}

void LiveSession::close() {
    check_open();
    buffer_.discard();
    closed_ = true;
}

// ---- SessionService ----

std::filesystem::path data_dir_from_env(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("CLCOACH_DATA_DIR"); env != nullptr && *env != '\0') return env;
    return fallback;
}

json SessionInfo::to_json() const {
    return {{"id", id},
            {"condition", std::string(clcoach::to_string(condition))},
            {"person", person},
            {"seed", seed},
            {"created_ms", created_ms},
            {"state", std::string(state_tag(state))},
            {"state_name", std::string(state_name(state))},
            {"item", item},
            {"awaiting_descriptive", awaiting_descriptive},
            {"finished", finished},
            {"closed", closed},
            {"has_model", has_model},
            {"buffered_frames", buffered_frames}};
}

ServiceEvent service_event_from_json(const json& j) {
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "yes_no" || type == "descriptive" || type == "reply") {
            UserInput u;
            u.kind = type == "yes_no" ? UserInput::Kind::YesNo
                     : type == "descriptive" ? UserInput::Kind::Descriptive
                                             : UserInput::Kind::Reply;
            u.transcript = j.at("transcript").get<std::string>();
            return u;
        }
        if (type == "affect") {
            AffectFrames a;
            if (j.contains("frames")) {
                for (const auto& f : j.at("frames")) a.frames.emplace_back(f.at(0).get<double>(), f.at(1).get<double>());
            } else {
                a.frames.emplace_back(j.at("valence").get<double>(), j.at("arousal").get<double>());
            }
            return a;
        }
        if (type == "features") {
            FeatureFrames f;
            if (j.contains("frames")) {
                for (const auto& v : j.at("frames")) f.frames.emplace_back(v.get<std::vector<double>>());
            } else {
                f.frames.emplace_back(j.at("values").get<std::vector<double>>());
            }
            return f;
        }
        throw ParameterError("unknown event type '" + type + "'");
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed event: ") + e.what());
    }
}

struct SessionService::Entry {
    Entry(LiveSession s, std::int64_t created) : session(std::move(s)), created_ms(created) {}

    mutable std::mutex m;
    mutable std::condition_variable cv;
    LiveSession session;
    std::int64_t created_ms;
    std::vector<json> stream;
    bool stopping = false;

    void publish(const std::vector<RobotEvent>& events) {
        for (const auto& e : events) {
            auto j = robot_event_json(e);
            j["state"] = std::string(state_tag(session.dialogue().state()));
            stream.push_back(std::move(j));
        }
        if (!events.empty()) cv.notify_all();
    }
};

SessionService::SessionService(ServiceConfig config) : config_(std::move(config)) {
    if (config_.live.bank == nullptr) throw ParameterError("service needs a sentence bank");
    std::filesystem::create_directories(config_.data_dir / "sessions");
    std::filesystem::create_directories(config_.data_dir / "models");
    // Continue numbering after logs left by earlier runs so ids stay unique.
    for (const auto& f : std::filesystem::directory_iterator(config_.data_dir / "sessions")) {
        const auto stem = f.path().stem().string();
        if (f.path().extension() == ".log" && stem.size() > 1 && stem[0] == 's') {
            try {
                next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(stem.substr(1)) + 1);
            } catch (const std::exception&) {
            }
        }
    }
}

SessionService::~SessionService() { shutdown(); }

std::filesystem::path SessionService::log_path(const std::string& id) const {
    return config_.data_dir / "sessions" / (id + ".log");
}

std::filesystem::path SessionService::model_path(const std::string& person) const {
    return config_.data_dir / "models" / (person + ".model");
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw UnknownSessionError("no session '" + id + "'");
    return it->second;
}

SessionInfo SessionService::info_of(const Entry& e) {
    const auto& s = e.session;
    SessionInfo info;
    info.id = s.id();
    info.condition = s.condition();
    info.person = s.person();
    info.seed = s.seed();
    info.created_ms = e.created_ms;
    info.state = s.dialogue().state();
    info.item = s.dialogue().item();
    info.awaiting_descriptive = s.dialogue().awaiting_descriptive();
    info.finished = s.dialogue().finished();
    info.closed = s.closed();
    info.has_model = s.model().has_value();
    info.buffered_frames = s.buffered_frames();
    return info;
}

Created SessionService::create_session(Condition condition, const std::string& person,
                                       std::optional<std::uint64_t> seed) {
    validate_person_id(person);
    std::optional<GdmPersonalModel> model;
    if (condition == Condition::C3) {
        const auto path = model_path(person);
        if (std::filesystem::exists(path)) {
            model.emplace(load_model(path));
            if (model->person_id() != person) throw DataError(path.string() + " belongs to " + model->person_id());
        } else {
            model.emplace(fresh_model(person, config_.live));
        }
    }
    std::string id;
    {
        std::lock_guard lock(mutex_);
        char buf[16];
        std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id_++));
        id = buf;
    }
    const auto created = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
    auto entry = std::make_shared<Entry>(
        LiveSession(id, condition, person, seed.value_or(stable_hash(id)), config_.live, std::move(model)), created);
    Created out;
    {
        std::lock_guard elock(entry->m);
        out.events = entry->session.start();
        entry->publish(out.events);
        out.session = info_of(*entry);
    }
    std::lock_guard lock(mutex_);
    sessions_[id] = entry;
    return out;
}

PostResult SessionService::post_event(const std::string& id, const ServiceEvent& event) {
    const auto entry = find(id);
    std::lock_guard lock(entry->m);
    auto& s = entry->session;
    PostResult out;
    if (const auto* u = std::get_if<UserInput>(&event)) {
        switch (u->kind) {
            case UserInput::Kind::YesNo: out.events = s.post_yes_no(u->transcript); break;
            case UserInput::Kind::Descriptive: out.events = s.post_descriptive(u->transcript); break;
            case UserInput::Kind::Reply: out.events = s.post_reply(u->transcript); break;
        }
        entry->publish(out.events);
    } else if (const auto* a = std::get_if<AffectFrames>(&event)) {
        for (const auto& p : a->frames) {
            out.last_frame = s.post_affect(p);
            ++out.frames_accepted;
        }
    } else {
        for (const auto& f : std::get<FeatureFrames>(event).frames) {
            out.last_frame = s.post_features(f);
            ++out.frames_accepted;
        }
    }
    out.session = info_of(*entry);
    return out;
}

SessionInfo SessionService::info(const std::string& id) const {
    const auto entry = find(id);
    std::lock_guard lock(entry->m);
    return info_of(*entry);
}

std::vector<SessionInfo> SessionService::list() const {
    std::vector<std::shared_ptr<Entry>> entries;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [id, e] : sessions_) entries.push_back(e);
    }
    std::vector<SessionInfo> out;
    for (const auto& e : entries) {
        std::lock_guard lock(e->m);
        out.push_back(info_of(*e));
    }
    return out;
}

MemorySnapshot SessionService::memory_snapshot(const std::string& id) const {
    const auto entry = find(id);
    std::lock_guard lock(entry->m);
    return entry->session.snapshot();
}

std::string SessionService::log_text(const std::string& id) const {
    const auto entry = find(id);
    std::lock_guard lock(entry->m);
    return entry->session.log().to_text();
}

ClosedFiles SessionService::close(const std::string& id) {
    const auto entry = find(id);
    std::lock_guard lock(entry->m);
    auto& s = entry->session;
    s.close();
    ClosedFiles out;
    out.log = log_path(id);
    write_file_atomic(out.log, s.log().to_text());
    if (s.model()) {
        out.model = model_path(s.person());
        save_model(*s.model(), *out.model);
    }
    entry->cv.notify_all();
    return out;
}

std::vector<StreamItem> SessionService::wait_events(const std::string& id, std::size_t from,
                                                    std::chrono::milliseconds timeout, bool& ended) const {
    const auto entry = find(id);
    std::unique_lock lock(entry->m);
    entry->cv.wait_for(lock, timeout, [&] {
        return entry->stream.size() > from || entry->session.closed() || entry->stopping;
    });
    std::vector<StreamItem> out;
    for (std::size_t i = from; i < entry->stream.size(); ++i) out.push_back({i, entry->stream[i]});
    ended = entry->session.closed() || entry->stopping;
    return out;
}

void SessionService::shutdown() {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    for (const auto& [id, e] : sessions_) {
        std::lock_guard elock(e->m);
        e->stopping = true;
        e->cv.notify_all();
    }
}

}  // namespace clcoach
