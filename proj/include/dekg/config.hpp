#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dekg/training.hpp"

namespace dekg {

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Keys accepted in config files and as command-line overrides.
const std::vector<std::string>& config_keys();

/// `key = value` lines; '#' or ';' starts a comment line.
ConfigEntries parse_config_entries(std::string_view text, std::string_view source = "<config>");

/// Applies entries in order; `gamma` is resolved last against the final dim.
void apply_config(TrainConfig& config, const ConfigEntries& entries);

TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);

/// Every key with its value, one per line; parse_config round-trips it.
std::string serialize_config(const TrainConfig& config);

std::string ablation_name(Ablation a);
Ablation parse_ablation(std::string_view text);

}  // namespace dekg
