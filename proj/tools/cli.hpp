// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memtrack/memory_bank.hpp"
#include "memtrack/synth_world.hpp"
#include "memtrack/tracker.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace memtrack::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvariant = 3;

struct RunConfig {
  std::string scenario;
  PolicyKind policy = PolicyKind::MaSam2;
  std::uint64_t seed = 0;
  BankConfig bank;
  ProposerParams proposer;
  std::string out_dir = "out";
};

struct AblateConfig {
  std::vector<std::string> scenarios;
  std::vector<PolicyKind> policies{std::begin(kAllPolicies), std::end(kAllPolicies)};
  std::vector<std::uint64_t> seeds;
  BankConfig bank;
  ProposerParams proposer;
  std::string out_dir = "out";
};

// Strict parsers: unknown keys and wrong types throw ConfigError.
RunConfig parse_run_config(std::string_view text);
AblateConfig parse_ablate_config(std::string_view text);
void apply_bank_overrides(BankConfig& cfg, std::string_view json_object);
void apply_proposer_overrides(ProposerParams& params, std::string_view json_object);

/// Canonical JSON of the effective configuration; its content_hash goes in
/// every output header.
std::string canonical_json(const RunConfig& cfg);
std::string canonical_json(const AblateConfig& cfg);

/// A builtin name, else a path to a scenario JSON file. Throws ConfigError.
ScenarioScript resolve_scenario(const std::string& name_or_path);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<std::filesystem::path> out_dir;
};

// Each command returns a process exit code and never throws.
int cmd_render(const std::string& scenario, const std::filesystem::path& out_dir);
int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides = {});
int cmd_ablate(const std::filesystem::path& config_path,
               const std::optional<std::filesystem::path>& out_dir, std::size_t jobs);
int cmd_eval(const std::filesystem::path& result_path, const std::filesystem::path& gt_path,
             const std::optional<std::filesystem::path>& out_dir);

/// Reads MEMTRACK_LOG (trace|debug|info|warn|error|off) into spdlog.
void init_logging();

}  // namespace memtrack::cli
