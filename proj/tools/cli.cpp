// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "memtrack/error.hpp"
#include "memtrack/metrics.hpp"
#include "memtrack/serialization.hpp"

#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace memtrack::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

json parse_object(std::string_view text, const std::string& what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError(what + ": expected a JSON object");
  }
  return j;
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const auto k : known) {
      found = found || key == k;
    }
    if (!found) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

double get_real(const json& v, const std::string& where) {
  if (!v.is_number()) {
    throw ConfigError(where + ": expected a number");
  }
  return v.get<double>();
}

std::uint64_t get_unsigned(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) {
    throw ConfigError(where + ": expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) {
    throw ConfigError(where + ": expected a string");
  }
  return v.get<std::string>();
}

void bank_from(BankConfig& cfg, const json& j) {
  if (!j.is_object()) {
    throw ConfigError("bank: expected an object");
  }
  reject_unknown(j,
                 {"total_capacity", "orm_capacity", "cam_conf_threshold", "cam_iou_threshold",
                  "theta_iou", "band_lo", "band_hi", "epsilon"},
                 "bank");
  for (const auto& [key, v] : j.items()) {
    const std::string where = "bank." + key;
    if (key == "total_capacity") {
      cfg.total_capacity = get_unsigned(v, where);
    } else if (key == "orm_capacity") {
      cfg.orm_capacity = get_unsigned(v, where);
    } else if (key == "cam_conf_threshold") {
      cfg.cam_conf_threshold = get_real(v, where);
    } else if (key == "cam_iou_threshold") {
      cfg.cam_iou_threshold = get_real(v, where);
    } else if (key == "theta_iou") {
      cfg.theta_iou = get_real(v, where);
    } else if (key == "band_lo") {
      cfg.band_lo = get_real(v, where);
    } else if (key == "band_hi") {
      cfg.band_hi = get_real(v, where);
    } else if (key == "epsilon") {
      cfg.epsilon = get_real(v, where);
    }
  }
  cfg.validate();
}

void proposer_from(ProposerParams& p, const json& j) {
  if (!j.is_object()) {
    throw ConfigError("proposer: expected an object");
  }
  reject_unknown(j,
                 {"q_min", "q_max", "r_max", "j_max", "p_swap_base", "p_miss_base", "sigma_iou",
                  "sigma_conf", "branch_offsets"},
                 "proposer");
  for (const auto& [key, v] : j.items()) {
    const std::string where = "proposer." + key;
    if (key == "q_min") {
      p.q_min = get_real(v, where);
    } else if (key == "q_max") {
      p.q_max = get_real(v, where);
    } else if (key == "r_max") {
      p.r_max = static_cast<int>(get_unsigned(v, where));
    } else if (key == "j_max") {
      p.j_max = static_cast<int>(get_unsigned(v, where));
    } else if (key == "p_swap_base") {
      p.p_swap_base = get_real(v, where);
    } else if (key == "p_miss_base") {
      p.p_miss_base = get_real(v, where);
    } else if (key == "sigma_iou") {
      p.sigma_iou = get_real(v, where);
    } else if (key == "sigma_conf") {
      p.sigma_conf = get_real(v, where);
    } else if (key == "branch_offsets") {
      if (!v.is_array() || v.size() != kBranchCount) {
        throw ConfigError(where + ": expected an array of 3 numbers");
      }
      for (std::size_t k = 0; k < kBranchCount; ++k) {
        p.branch_offsets[k] = get_real(v[k], where + "[" + std::to_string(k) + "]");
      }
    }
  }
  p.validate();
}

PolicyKind policy_from(const json& v, const std::string& where) {
  return parse_policy(get_string(v, where));
}

ojson bank_json(const BankConfig& c) {
  ojson j;
  j["total_capacity"] = c.total_capacity;
  j["orm_capacity"] = c.orm_capacity;
  j["cam_conf_threshold"] = c.cam_conf_threshold;
  j["cam_iou_threshold"] = c.cam_iou_threshold;
  j["theta_iou"] = c.theta_iou;
  j["band_lo"] = c.band_lo;
  j["band_hi"] = c.band_hi;
  j["epsilon"] = c.epsilon;
  return j;
}

ojson proposer_json(const ProposerParams& p) {
  ojson j;
  j["q_min"] = p.q_min;
  j["q_max"] = p.q_max;
  j["r_max"] = p.r_max;
  j["j_max"] = p.j_max;
  j["p_swap_base"] = p.p_swap_base;
  j["p_miss_base"] = p.p_miss_base;
  j["sigma_iou"] = p.sigma_iou;
  j["sigma_conf"] = p.sigma_conf;
  j["branch_offsets"] = p.branch_offsets;
  return j;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError("cannot write '" + path.string() + "'");
  }
  out << content;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("cannot create '" + dir.string() + "': " + ec.message());
  }
}

int guarded(const char* command, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    spdlog::error("{}: {}", command, e.what());
    return kExitUsage;
  } catch (const InvariantViolation& e) {
    spdlog::critical("{}: invariant violated: {}", command, e.what());
    return kExitInvariant;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}: {}", command, e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::critical("{}: {}", command, e.what());
    return kExitFailure;
  }
}

}  // namespace

void apply_bank_overrides(BankConfig& cfg, std::string_view json_object) {
  bank_from(cfg, parse_object(json_object, "bank"));
}

void apply_proposer_overrides(ProposerParams& params, std::string_view json_object) {
  proposer_from(params, parse_object(json_object, "proposer"));
}

RunConfig parse_run_config(std::string_view text) {
  const json j = parse_object(text, "run config");
  reject_unknown(j, {"scenario", "policy", "seed", "bank", "proposer", "out_dir"}, "run config");
  if (!j.contains("scenario")) {
    throw ConfigError("run config: missing required key 'scenario'");
  }
  RunConfig cfg;
  cfg.scenario = get_string(j["scenario"], "scenario");
  if (j.contains("policy")) {
    cfg.policy = policy_from(j["policy"], "policy");
  }
  if (j.contains("seed")) {
    cfg.seed = get_unsigned(j["seed"], "seed");
  }
  if (j.contains("bank")) {
    bank_from(cfg.bank, j["bank"]);
  }
  if (j.contains("proposer")) {
    proposer_from(cfg.proposer, j["proposer"]);
  }
  if (j.contains("out_dir")) {
    cfg.out_dir = get_string(j["out_dir"], "out_dir");
  }
  return cfg;
}

AblateConfig parse_ablate_config(std::string_view text) {
  const json j = parse_object(text, "ablate config");
  reject_unknown(j, {"scenarios", "policies", "seeds", "bank", "proposer", "out_dir"},
                 "ablate config");
  AblateConfig cfg;
  if (!j.contains("scenarios") || !j["scenarios"].is_array() || j["scenarios"].empty()) {
    throw ConfigError("ablate config: 'scenarios' must be a nonempty array");
  }
  for (std::size_t i = 0; i < j["scenarios"].size(); ++i) {
    cfg.scenarios.push_back(get_string(j["scenarios"][i], "scenarios[" + std::to_string(i) + "]"));
  }
  if (!j.contains("seeds") || !j["seeds"].is_array() || j["seeds"].empty()) {
    throw ConfigError("ablate config: 'seeds' must be a nonempty array");
  }
  for (std::size_t i = 0; i < j["seeds"].size(); ++i) {
    cfg.seeds.push_back(get_unsigned(j["seeds"][i], "seeds[" + std::to_string(i) + "]"));
  }
  if (j.contains("policies")) {
    if (!j["policies"].is_array() || j["policies"].empty()) {
      throw ConfigError("ablate config: 'policies' must be a nonempty array");
    }
    cfg.policies.clear();
    for (std::size_t i = 0; i < j["policies"].size(); ++i) {
      const PolicyKind p = policy_from(j["policies"][i], "policies[" + std::to_string(i) + "]");
      if (std::find(cfg.policies.begin(), cfg.policies.end(), p) != cfg.policies.end()) {
        throw ConfigError("ablate config: policy '" + std::string(to_string(p)) + "' repeated");
      }
      cfg.policies.push_back(p);
    }
  }
  if (j.contains("bank")) {
    bank_from(cfg.bank, j["bank"]);
  }
  if (j.contains("proposer")) {
    proposer_from(cfg.proposer, j["proposer"]);
  }
  if (j.contains("out_dir")) {
    cfg.out_dir = get_string(j["out_dir"], "out_dir");
  }
  return cfg;
}

std::string canonical_json(const RunConfig& cfg) {
  ojson j;
  j["scenario"] = cfg.scenario;
  j["policy"] = std::string(to_string(cfg.policy));
  j["seed"] = cfg.seed;
  j["bank"] = bank_json(cfg.bank);
  j["proposer"] = proposer_json(cfg.proposer);
  return j.dump();
}

std::string canonical_json(const AblateConfig& cfg) {
  ojson j;
  j["scenarios"] = cfg.scenarios;
  ojson policies = ojson::array();
  for (const PolicyKind p : cfg.policies) {
    policies.push_back(std::string(to_string(p)));
  }
  j["policies"] = std::move(policies);
  j["seeds"] = cfg.seeds;
  j["bank"] = bank_json(cfg.bank);
  j["proposer"] = proposer_json(cfg.proposer);
  return j.dump();
}

ScenarioScript resolve_scenario(const std::string& name_or_path) {
  const auto& builtins = builtin_scenarios();
  if (const auto it = builtins.find(name_or_path); it != builtins.end()) {
    return it->second;
  }
  const fs::path path(name_or_path);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    std::string names;
    for (const auto& [name, s] : builtins) {
      names += (names.empty() ? "" : ", ") + name;
    }
    throw ConfigError("scenario '" + name_or_path + "' is neither a builtin (" + names +
                      ") nor a readable file");
  }
  try {
    return scenario_from_json(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

int cmd_render(const std::string& scenario, const fs::path& out_dir) {
  return guarded("render", [&] {
    const ScenarioScript script = resolve_scenario(scenario);
    const std::string hash = content_hash(scenario_to_json(script));
    const auto frames = render_scenario(script);
    ensure_dir(out_dir);
    std::ostringstream gt;
    write_ground_truth(gt, frames, hash);
    write_file(out_dir / "gt.jsonl", gt.str());
    spdlog::info("render: {} frames -> {}", frames.size(), (out_dir / "gt.jsonl").string());
    return kExitOk;
  });
}

int cmd_run(const fs::path& config_path, const RunOverrides& overrides) {
  return guarded("run", [&] {
    RunConfig cfg = parse_run_config(read_file(config_path));
    if (overrides.seed) {
      cfg.seed = *overrides.seed;
    }
    if (overrides.policy) {
      cfg.policy = parse_policy(*overrides.policy);
    }
    const fs::path out_dir = overrides.out_dir ? *overrides.out_dir : fs::path(cfg.out_dir);
    const std::string hash = content_hash(canonical_json(cfg));
    const ScenarioScript script = resolve_scenario(cfg.scenario);
    const auto frames = render_scenario(script);
    const Prompt prompt = prompt_from_ground_truth(frames);
    spdlog::info("run: scenario={} policy={} seed={} frames={}", cfg.scenario,
                 to_string(cfg.policy), cfg.seed, frames.size());
    const TrackResult result = run_sequence(frames, prompt, cfg.policy, cfg.bank,
                                            make_synthetic_proposer(cfg.proposer), cfg.seed);
    const MetricReport report = evaluate(result, frames);

    ensure_dir(out_dir);
    std::ostringstream res;
    write_track_result(res, result, hash);
    write_file(out_dir / "result.jsonl", res.str());
    std::ostringstream gt;
    write_ground_truth(gt, frames, hash);
    write_file(out_dir / "gt.jsonl", gt.str());
    std::ostringstream trace;
    write_bank_trace(trace, result, hash);
    write_file(out_dir / "bank_trace.jsonl", trace.str());
    const std::string scenario_name = fs::path(cfg.scenario).stem().string();
    const std::string row = metrics_csv_row(to_string(cfg.policy), scenario_name, cfg.seed, report);
    write_file(out_dir / "metrics.csv", "# config_hash=" + hash + "\n" +
                                            std::string(kMetricsCsvHeader) + "\n" + row + "\n");
    std::cout << kMetricsCsvHeader << '\n' << row << '\n';
    return kExitOk;
  });
}

int cmd_ablate(const fs::path& config_path, const std::optional<fs::path>& out_override,
               std::size_t jobs) {
  return guarded("ablate", [&] {
    const AblateConfig cfg = parse_ablate_config(read_file(config_path));
    const fs::path out_dir = out_override ? *out_override : fs::path(cfg.out_dir);
    const std::string hash = content_hash(canonical_json(cfg));

    AblationSpec spec;
    std::set<std::string> names;
    for (const auto& s : cfg.scenarios) {
      std::string name = fs::path(s).stem().string();
      if (!names.insert(name).second) {
        throw ConfigError("ablate config: scenario name '" + name + "' repeated");
      }
      spec.scenarios.push_back({std::move(name), resolve_scenario(s)});
    }
    spec.seeds = cfg.seeds;
    spec.policies = cfg.policies;
    spec.bank = cfg.bank;
    spec.proposer = cfg.proposer;
    spec.jobs = std::max<std::size_t>(1, jobs);
    spdlog::info("ablate: {} cells on {} worker(s)",
                 spec.scenarios.size() * spec.seeds.size() * spec.policies.size(), spec.jobs);

    ensure_dir(out_dir);
    AblationTable table;
    try {
      table = run_ablation(spec);
    } catch (const std::exception& e) {
      write_file(out_dir / "FAILED", std::string(e.what()) + "\n");
      throw;
    }
    std::error_code ec;
    fs::remove(out_dir / "FAILED", ec);

    std::ostringstream csv;
    write_ablation_csv(csv, table, hash);
    write_file(out_dir / "ablation.csv", csv.str());
    write_file(out_dir / "aggregate.json", ablation_aggregate_json(table, hash) + "\n");
    const std::string text = ablation_text_table(table, hash);
    write_file(out_dir / "table.txt", text);
    std::cout << text;

    const auto& agg = table.aggregate;
    const bool all = agg.size() == std::size(kAllPolicies);
    if (all) {
      const double fifo = agg.at(PolicyKind::Fifo).challenge_iou;
      const double cam = agg.at(PolicyKind::CamOnly).challenge_iou;
      const double orm = agg.at(PolicyKind::OrmOnly).challenge_iou;
      const double ma = agg.at(PolicyKind::MaSam2).challenge_iou;
      const bool ok = ma >= orm && orm >= cam && cam >= fifo && ma - fifo >= 3.0;
      char line[160];
      std::snprintf(line, sizeof line,
                    "%s ordering ma >= orm >= cam >= fifo, ma - fifo = %+.2f (needs >= 3.00)\n",
                    ok ? "PASS" : "FAIL", ma - fifo);
      std::cout << line;
    }
    return kExitOk;
  });
}

int cmd_eval(const fs::path& result_path, const fs::path& gt_path,
             const std::optional<fs::path>& out_dir) {
  return guarded("eval", [&] {
    std::vector<MaskFrame> pred;
    std::vector<MaskFrame> gt;
    {
      std::istringstream in(read_file(result_path));
      try {
        pred = read_mask_frames(in);
      } catch (const ConfigError& e) {
        throw ConfigError(result_path.string() + ": " + e.what());
      }
    }
    {
      std::istringstream in(read_file(gt_path));
      try {
        gt = read_mask_frames(in);
      } catch (const ConfigError& e) {
        throw ConfigError(gt_path.string() + ": " + e.what());
      }
    }
    if (pred.size() != gt.size()) {
      throw ConfigError("eval: result has " + std::to_string(pred.size()) +
                        " frames, ground truth " + std::to_string(gt.size()));
    }
    const MetricReport r = evaluate(pred, gt);
    char row[160];
    std::snprintf(row, sizeof row, "%.4f,%.4f,%.4f,%zu", r.challenge_iou, r.iou, r.mciou,
                  r.frames_evaluated);
    const std::string text = "challenge_iou,iou,mciou,frames_evaluated\n" + std::string(row) + "\n";
    std::cout << text;
    if (out_dir) {
      ensure_dir(*out_dir);
      write_file(*out_dir / "eval.csv", text);
    }
    return kExitOk;
  });
}

void init_logging() {
  auto logger = spdlog::stderr_logger_mt("memtrack");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("MEMTRACK_LOG"); env != nullptr && *env != '\0') {
    const auto parsed = spdlog::level::from_str(env);
    if (parsed == spdlog::level::off && std::string_view(env) != "off") {
      spdlog::warn("MEMTRACK_LOG='{}' not recognised; using warn", env);
    } else {
      level = parsed;
    }
  }
  spdlog::set_level(level);
}

}  // namespace memtrack::cli
