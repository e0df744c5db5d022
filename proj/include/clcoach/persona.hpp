#pragma once
// Synthetic participants. A persona has a ground-truth affect response per
// exercise and a personal expression map. The map agrees with the canonical
// one up to (a) an affect offset, which the generic annotator then misreads
// as a bias, and (b) idiosyncratic directions the annotator cannot see.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "clcoach/affect.hpp"
#include "clcoach/dialogue.hpp"
#include "clcoach/expression.hpp"

namespace clcoach {

struct StateAffect {
    AffectPoint mean;
    double jitter = 0.1;  // std-dev of i.i.d. per-frame jitter on each axis
};

struct PersonaSpec {
    std::string id;
    AffectPoint base_affect;
    std::map<SessionState, StateAffect> responses;  // exercise states
    AffectPoint annotator_bias;       // generic read-out minus true affect
    double expressivity_gain = 1.0;   // scales the affect directions
    double idiosyncrasy = 0.5;        // relative size of the private directions
    double identity_offset = 2.0;     // norm of the private resting-face offset
    double feature_noise = 0.05;      // per-component std-dev
    double hesitation = 0.0;          // chance of "not yet" before agreeing to start
    std::uint64_t seed = 1;           // draws the private directions
};

struct Persona {
    PersonaSpec spec;
    ExpressionModel expression;  // D x 3 personal map
    std::vector<std::string> stories;

    const std::string& id() const noexcept { return spec.id; }
    const StateAffect& response(SessionState s) const;
};

Persona build_persona(const PersonaSpec& spec, std::size_t dim = kDefaultFeatureDim);

PersonaSpec persona_spec_from_json(const nlohmann::json& j);
nlohmann::json persona_spec_to_json(const PersonaSpec& spec);

// Named personas from a catalogue file: {"personas": [spec, ...]}.
std::vector<PersonaSpec> load_persona_catalogue(const std::filesystem::path& path);
std::filesystem::path default_persona_catalogue();

// Resolves either a catalogue name or a path to a single-persona JSON file.
PersonaSpec resolve_persona(const std::string& name_or_path,
                            const std::filesystem::path& catalogue = default_persona_catalogue());

struct SynthFrame {
    FeatureVector features;
    AffectPoint truth;
};

// Per frame: truth = state mean + jitter (clamped); features = M [v a 1]^T + noise.
std::vector<SynthFrame> synth_response(const Persona& persona, SessionState state, std::size_t frames,
                                       std::uint64_t rng_seed);

}  // namespace clcoach
