#pragma once
// Versioned JSON files for networks and personal models. Doubles are written
// in shortest round-trip form, so save -> load -> save is byte-identical.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "clcoach/gdm.hpp"
#include "clcoach/gwr.hpp"

namespace clcoach {

inline constexpr int kNetworkFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;

nlohmann::json network_to_json(const GammaGwrNetwork& net);
GammaGwrNetwork network_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const GwrParams& p);
GwrParams params_from_json(const nlohmann::json& j);

std::string serialize_model(const GdmPersonalModel& model);
GdmPersonalModel deserialize_model(const std::string& text);

// Writes through a temporary file and renames it into place.
void save_model(const GdmPersonalModel& model, const std::filesystem::path& path);
GdmPersonalModel load_model(const std::filesystem::path& path);

// Atomic text write shared by the log and model writers.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace clcoach
