#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>

#include "ddfc/scenarios.hpp"

namespace ddfc {

/// Sets one field from its text form. Throws ConfigError naming the key.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment. Errors carry the line number.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = default_benchmark());
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base = default_benchmark());

Mode parse_mode(std::string_view text);

}  // namespace ddfc
