#include "clcoach/persistence.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "clcoach/error.hpp"

namespace clcoach {

using nlohmann::json;

namespace {

json vec(const FeatureVector& v) { return json(std::vector<double>(v.values().begin(), v.values().end())); }

FeatureVector vec_from(const json& j, std::size_t dim) {
    auto values = j.get<std::vector<double>>();
    if (values.size() != dim) throw DataError("vector of length " + std::to_string(values.size()) + ", expected " + std::to_string(dim));
    return FeatureVector(std::move(values));
}

json affect(const std::optional<AffectPoint>& p) {
    if (!p) return nullptr;
    return json::array({p->valence(), p->arousal()});
}

std::optional<AffectPoint> affect_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return AffectPoint(j.at(0).get<double>(), j.at(1).get<double>());
}

void expect_format(const json& j, const char* format, int version) {
    if (!j.is_object() || !j.contains("format") || j.at("format") != format) {
        throw DataError(std::string("not a ") + format + " document");
    }
    const int found = j.at("version").get<int>();
    if (found != version) {
        throw VersionError(std::string(format) + " version " + std::to_string(found) + " is not supported (expected " +
                           std::to_string(version) + ")");
    }
}

}  // namespace

struct NetworkCodec {
    static json encode(const GammaGwrNetwork& net) {
        json neurons = json::array();
        for (const auto& n : net.neurons_) {
            json ctx = json::array();
            for (const auto& c : n.contexts) ctx.push_back(vec(c));
            neurons.push_back({{"weight", vec(n.weight)},
                               {"contexts", ctx},
                               {"habituation", n.habituation},
                               {"label", affect(n.label_mean)},
                               {"label_count", n.label_count},
                               {"uid", n.uid}});
        }
        json edges = json::array();
        for (const auto& [k, age] : net.edges_) edges.push_back({k.first, k.second, age});
        json succ = json::array();
        for (const auto& [k, c] : net.successors_) succ.push_back({k.first, k.second, c});
        json ctx = json::array();
        for (const auto& c : net.global_context_) ctx.push_back(vec(c));
        json prev = net.prev_winner_ ? json(*net.prev_winner_) : json(nullptr);
        return {{"format", "clcoach-gwr"},
                {"version", kNetworkFormatVersion},
                {"dim", net.dim_},
                {"params", params_to_json(net.params_)},
                {"neurons", neurons},
                {"edges", edges},
                {"global_context", ctx},
                {"successors", succ},
                {"previous_winner", prev},
                {"steps", net.steps_},
                {"next_uid", net.next_uid_}};
    }

    static GammaGwrNetwork decode(const json& j) {
        expect_format(j, "clcoach-gwr", kNetworkFormatVersion);
        GammaGwrNetwork net;
        net.params_ = params_from_json(j.at("params"));
        net.params_.validate();
        net.dim_ = j.at("dim").get<std::size_t>();
        const auto depth = static_cast<std::size_t>(net.params_.depth);
        for (const auto& jn : j.at("neurons")) {
            Neuron n;
            n.weight = vec_from(jn.at("weight"), net.dim_);
            for (const auto& c : jn.at("contexts")) n.contexts.push_back(vec_from(c, net.dim_));
            if (n.contexts.size() != depth) throw DataError("neuron context count does not match depth");
            n.habituation = jn.at("habituation").get<double>();
            if (!(n.habituation > 0.0 && n.habituation <= 1.0)) throw DataError("habituation out of (0,1]");
            n.label_mean = affect_from(jn.at("label"));
            n.label_count = jn.at("label_count").get<std::uint64_t>();
            if (n.label_mean.has_value() != (n.label_count > 0)) throw DataError("label and label count disagree");
            n.uid = jn.at("uid").get<std::uint64_t>();
            net.neurons_.push_back(std::move(n));
        }
        if (net.neurons_.size() < 2) throw DataError("network needs at least two neurons");
        const auto n = net.neurons_.size();
        for (const auto& e : j.at("edges")) {
            const auto a = e.at(0).get<std::size_t>();
            const auto b = e.at(1).get<std::size_t>();
            if (a >= n || b >= n || a >= b) throw DataError("invalid edge endpoints");
            net.edges_[{a, b}] = e.at(2).get<int>();
        }
        for (const auto& c : j.at("global_context")) net.global_context_.push_back(vec_from(c, net.dim_));
        if (net.global_context_.size() != depth) throw DataError("global context count does not match depth");
        for (const auto& s : j.at("successors")) {
            const auto a = s.at(0).get<std::size_t>();
            const auto b = s.at(1).get<std::size_t>();
            if (a >= n || b >= n) throw DataError("invalid successor endpoints");
            net.successors_[{a, b}] = s.at(2).get<std::uint64_t>();
        }
        if (!j.at("previous_winner").is_null()) {
            const auto p = j.at("previous_winner").get<std::size_t>();
            if (p >= n) throw DataError("invalid previous winner");
            net.prev_winner_ = p;
        }
        net.steps_ = j.at("steps").get<std::uint64_t>();
        net.next_uid_ = j.at("next_uid").get<std::uint64_t>();
        std::set<std::uint64_t> uids;
        for (const auto& neuron : net.neurons_) {
            if (neuron.uid >= net.next_uid_ || !uids.insert(neuron.uid).second) throw DataError("invalid neuron uid");
        }
        return net;
    }
};

struct ModelCodec {
    static json encode(const GdmPersonalModel& m) {
        return {{"format", "clcoach-model"},
                {"version", kModelFormatVersion},
                {"person_id", m.person_id_},
                {"cadence", m.cadence_},
                {"samples_seen", m.samples_seen_},
                {"pending_responses", m.pending_responses_},
                {"episodic", NetworkCodec::encode(m.episodic_)},
                {"semantic", NetworkCodec::encode(m.semantic_)}};
    }

    static GdmPersonalModel decode(const json& j) {
        expect_format(j, "clcoach-model", kModelFormatVersion);
        GdmPersonalModel m(j.at("person_id").get<std::string>(), NetworkCodec::decode(j.at("episodic")),
                           NetworkCodec::decode(j.at("semantic")), j.at("cadence").get<std::size_t>());
        m.samples_seen_ = j.at("samples_seen").get<std::uint64_t>();
        m.pending_responses_ = j.at("pending_responses").get<std::size_t>();
        return m;
    }
};

json params_to_json(const GwrParams& p) {
    return {{"insertion_threshold", p.insertion_threshold},
            {"habituation_threshold", p.habituation_threshold},
            {"learn_rate_bmu", p.learn_rate_bmu},
            {"learn_rate_neighbor", p.learn_rate_neighbor},
            {"context_blend", p.context_blend},
            {"depth", p.depth},
            {"distance_weights", p.distance_weights},
            {"tau_bmu", p.tau_bmu},
            {"tau_neighbor", p.tau_neighbor},
            {"max_edge_age", p.max_edge_age},
            {"label_rate", p.label_rate}};
}

GwrParams params_from_json(const json& j) {
    GwrParams p;
    p.insertion_threshold = j.at("insertion_threshold").get<double>();
    p.habituation_threshold = j.at("habituation_threshold").get<double>();
    p.learn_rate_bmu = j.at("learn_rate_bmu").get<double>();
    p.learn_rate_neighbor = j.at("learn_rate_neighbor").get<double>();
    p.context_blend = j.at("context_blend").get<double>();
    p.depth = j.at("depth").get<int>();
    p.distance_weights = j.at("distance_weights").get<std::vector<double>>();
    p.tau_bmu = j.at("tau_bmu").get<double>();
    p.tau_neighbor = j.at("tau_neighbor").get<double>();
    p.max_edge_age = j.at("max_edge_age").get<int>();
    p.label_rate = j.at("label_rate").get<double>();
    return p;
}

json network_to_json(const GammaGwrNetwork& net) { return NetworkCodec::encode(net); }

GammaGwrNetwork network_from_json(const json& j) {
    try {
        return NetworkCodec::decode(j);
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt network document: ") + e.what());
    } catch (const ParameterError& e) {
        throw DataError(std::string("corrupt network document: ") + e.what());
    }
}

std::string serialize_model(const GdmPersonalModel& model) { return ModelCodec::encode(model).dump() + "\n"; }

GdmPersonalModel deserialize_model(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("corrupt model file: ") + e.what());
    }
    try {
        return ModelCodec::decode(j);
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt model file: ") + e.what());
    } catch (const ParameterError& e) {
        throw DataError(std::string("corrupt model file: ") + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << content;
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_model(const GdmPersonalModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(model));
}

GdmPersonalModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace clcoach
