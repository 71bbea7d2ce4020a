#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rforge/nn/parameters.hpp"

namespace rforge::nn {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointIndexFile = "checkpoint.json";
inline constexpr const char* kCheckpointDataFile = "params.bin";

// A parameter set saved under a name prefix ("policy/", "value/", ...).
using PrefixedSet = std::pair<std::string, ParameterSet*>;

// Writes checkpoint.json (version, config, record index) and params.bin, a
// flat sequence of (name length, name, rows, cols, values) records.
void save_checkpoint(const std::filesystem::path& dir, const nlohmann::json& config,
                     const std::vector<std::pair<std::string, const ParameterSet*>>& sets);

// Reads the config stored alongside a checkpoint.
nlohmann::json load_checkpoint_config(const std::filesystem::path& dir);

// Fills every listed set from the checkpoint; names and shapes must match.
void load_checkpoint(const std::filesystem::path& dir, const std::vector<PrefixedSet>& sets);

}  // namespace rforge::nn
