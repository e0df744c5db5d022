#include "clcoach/persona.hpp"

#include <cmath>
#include <random>

#include "clcoach/error.hpp"
#include "clcoach/persistence.hpp"

namespace clcoach {

using nlohmann::json;

namespace {

// Random unit vector in the span of basis columns [3, D).
Eigen::VectorXd private_direction(const Eigen::MatrixXd& q, std::mt19937_64& rng) {
    const auto d = q.rows();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    if (d <= 3) return v;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index c = 3; c < d; ++c) v += normal(rng) * q.col(c);
    return v / v.norm();
}

json affect_json(const AffectPoint& p) { return json::array({p.valence(), p.arousal()}); }

AffectPoint affect_from(const json& j) { return AffectPoint(j.at(0).get<double>(), j.at(1).get<double>()); }

const std::vector<std::string>& default_stories() {
    static const std::vector<std::string> s{
        "I went hiking with some friends last weekend and the weather was perfect.",
        "My sister visited and we cooked dinner together.",
        "I finally finished a project at work that I had been stuck on for a while.",
        "I started learning to play the guitar again.",
        "A colleague thanked me for helping them with a difficult task.",
        "I had a long phone call with my grandmother.",
        "I managed to go running three times this week.",
        "We adopted a cat from the shelter.",
    };
    return s;
}

}  // namespace

const StateAffect& Persona::response(SessionState s) const {
    const auto it = spec.responses.find(s);
    if (it == spec.responses.end()) {
        throw ParameterError("persona " + spec.id + " has no affect response for " + std::string(state_tag(s)));
    }
    return it->second;
}

Persona build_persona(const PersonaSpec& spec, std::size_t dim) {
    if (spec.id.empty()) throw ParameterError("persona needs an id");
    if (!(spec.feature_noise >= 0.0) || !(spec.idiosyncrasy >= 0.0) || !(spec.identity_offset >= 0.0)) {
        throw ParameterError("persona noise and idiosyncrasy must be non-negative");
    }
    if (!(spec.expressivity_gain > 0.0)) throw ParameterError("persona expressivity gain must be positive");
    if (!(spec.hesitation >= 0.0 && spec.hesitation < 1.0)) throw ParameterError("hesitation must lie in [0,1)");
    for (const auto& [state, r] : spec.responses) {
        if (!(r.jitter >= 0.0)) throw ParameterError("persona jitter must be non-negative");
    }

    const auto& q = canonical_basis(dim);
    const double s = ExpressionModel::kAffectGain;
    const double g = spec.expressivity_gain;
    std::mt19937_64 rng(mix_seed(spec.seed, stable_hash(spec.id)));
    const Eigen::VectorXd u0 = private_direction(q, rng);
    const Eigen::VectorXd u1 = private_direction(q, rng);
    const Eigen::VectorXd u2 = private_direction(q, rng);

    Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), 3);
    m.col(0) = g * s * q.col(0) + spec.idiosyncrasy * s * u0;
    m.col(1) = g * s * q.col(1) + spec.idiosyncrasy * s * u1;
    m.col(2) = ExpressionModel::kIdentityGain * q.col(2) + s * spec.annotator_bias.valence() * q.col(0) +
               s * spec.annotator_bias.arousal() * q.col(1) + spec.identity_offset * u2;
    return Persona{spec, ExpressionModel(std::move(m)), default_stories()};
}

std::vector<SynthFrame> synth_response(const Persona& persona, SessionState state, std::size_t frames,
                                       std::uint64_t rng_seed) {
    if (frames == 0) throw ParameterError("a response needs at least one frame");
    const auto& r = persona.response(state);
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::vector<SynthFrame> out;
    out.reserve(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const double dv = r.jitter > 0.0 ? r.jitter * jitter(rng) : 0.0;
        const double da = r.jitter > 0.0 ? r.jitter * jitter(rng) : 0.0;
        const auto truth = AffectPoint::clamped(r.mean.valence() + dv, r.mean.arousal() + da);
        out.push_back({persona.expression.express(truth, persona.spec.feature_noise, &rng), truth});
    }
    return out;
}

PersonaSpec persona_spec_from_json(const json& j) {
    try {
        PersonaSpec s;
        s.id = j.at("id").get<std::string>();
        s.base_affect = affect_from(j.value("base_affect", json::array({0.0, 0.0})));
        for (const auto& [tag, r] : j.at("responses").items()) {
            const auto state = state_from_tag(tag);
            if (!is_exercise(state)) throw DataError("persona responses only cover S2..S4, got " + tag);
            s.responses[state] = StateAffect{affect_from(r.at("mean")), r.value("jitter", 0.1)};
        }
        s.annotator_bias = affect_from(j.value("annotator_bias", json::array({0.0, 0.0})));
        s.expressivity_gain = j.value("expressivity_gain", 1.0);
        s.idiosyncrasy = j.value("idiosyncrasy", 0.5);
        s.identity_offset = j.value("identity_offset", 2.0);
        s.feature_noise = j.value("feature_noise", 0.05);
        s.hesitation = j.value("hesitation", 0.0);
        s.seed = j.value("seed", std::uint64_t{1});
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid persona: ") + e.what());
    } catch (const ParameterError& e) {
        throw DataError(std::string("invalid persona: ") + e.what());
    }
}

json persona_spec_to_json(const PersonaSpec& s) {
    json responses = json::object();
    for (const auto& [state, r] : s.responses) {
        responses[std::string(state_tag(state))] = {{"mean", affect_json(r.mean)}, {"jitter", r.jitter}};
    }
    return {{"id", s.id},
            {"base_affect", affect_json(s.base_affect)},
            {"responses", responses},
            {"annotator_bias", affect_json(s.annotator_bias)},
            {"expressivity_gain", s.expressivity_gain},
            {"idiosyncrasy", s.idiosyncrasy},
            {"identity_offset", s.identity_offset},
            {"feature_noise", s.feature_noise},
            {"hesitation", s.hesitation},
            {"seed", s.seed}};
}

std::vector<PersonaSpec> load_persona_catalogue(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    std::vector<PersonaSpec> out;
    if (!j.contains("personas")) throw DataError(path.string() + ": missing 'personas' array");
    for (const auto& p : j.at("personas")) out.push_back(persona_spec_from_json(p));
    return out;
}

std::filesystem::path default_persona_catalogue() { return std::filesystem::path(CLCOACH_DATA_DIR) / "personas.json"; }

PersonaSpec resolve_persona(const std::string& name_or_path, const std::filesystem::path& catalogue) {
    const std::filesystem::path p(name_or_path);
    if (p.extension() == ".json" && std::filesystem::exists(p)) {
        json j;
        try {
            j = json::parse(read_file(p));
        } catch (const json::parse_error& e) {
            throw DataError(p.string() + ": " + e.what());
        }
        return persona_spec_from_json(j);
    }
    for (auto& s : load_persona_catalogue(catalogue)) {
        if (s.id == name_or_path) return s;
    }
    throw DataError("unknown persona '" + name_or_path + "'");
}

}  // namespace clcoach
