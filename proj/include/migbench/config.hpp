#pragma once

#include "migbench/matcher.hpp"
#include "migbench/service.hpp"
#include "migbench/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace migbench {

/// Settings shared by the commands. Relative paths in a config file resolve
/// against the file's directory.
struct RunConfig {
    std::filesystem::path kb_root;
    std::vector<ServiceRecord> services;
    Backend backend = Backend::Rulebook;
    std::optional<std::filesystem::path> rulebook;
    RemoteConfig remote;
    std::optional<std::filesystem::path> cache_dir;
    double tau = 0.2;
    EvidenceDetail detail = EvidenceDetail::All;
    bool skip_synth_failures = false;
    double noisy_factor = 5.0;
    VcsTool vcs;
    std::optional<std::filesystem::path> out_dir;
};

/// Parses a config document. Throws Error(BadConfig) on unknown keys or bad
/// values; paths are not checked here.
RunConfig parse_config(std::string_view document, const std::filesystem::path& base_dir);

RunConfig load_config(const std::filesystem::path& path);

/// Throws Error(UnreadableSource) when the KB root, a service source or the
/// rulebook does not exist, Error(BadConfig) when tau is outside [0, 1].
void check_config(const RunConfig& config);

/// Digest of the settings that shape generated suites.
std::string config_digest(const RunConfig& config);

SynthConfig synth_config(const RunConfig& config);

}  // namespace migbench
