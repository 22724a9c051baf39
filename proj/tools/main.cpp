// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
  namespace cli = memtrack::cli;
  cli::init_logging();

  CLI::App app{"memtrack: memory-bank policies on synthetic tracking scenes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "memtrack 0.1.0");

  std::string scenario;
  std::string render_out = "out";
  auto* render = app.add_subcommand("render", "Render a scenario's ground truth to gt.jsonl");
  auto* render_cfg = render->add_option("--config", scenario, "Scenario file or builtin name");
  render->add_option("scenario", scenario, "Scenario file or builtin name")->excludes(render_cfg);
  render->add_option("--out", render_out, "Output directory");

  std::string run_config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<std::string> run_out;
  auto* run = app.add_subcommand("run", "Track one scenario with one policy");
  run->add_option("--config", run_config, "Run config JSON")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--policy", policy, "Override the policy (fifo|cam|orm|ma)");
  run->add_option("--out", run_out, "Override the output directory");

  std::string ablate_config;
  std::optional<std::string> ablate_out;
  std::size_t jobs = 1;
  auto* ablate = app.add_subcommand("ablate", "Run every (scenario, seed, policy) cell");
  ablate->add_option("--config", ablate_config, "Ablation config JSON")->required();
  ablate->add_option("--out", ablate_out, "Override the output directory");
  ablate->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string result_path;
  std::string gt_path;
  std::optional<std::string> eval_out;
  auto* eval = app.add_subcommand("eval", "Recompute metrics from result and gt dumps");
  eval->add_option("result", result_path, "result.jsonl")->required();
  eval->add_option("gt", gt_path, "gt.jsonl")->required();
  eval->add_option("--out", eval_out, "Also write eval.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (*render) {
    if (scenario.empty()) {
      std::cerr << "render: a scenario is required\n";
      return cli::kExitUsage;
    }
    return cli::cmd_render(scenario, render_out);
  }
  if (*run) {
    cli::RunOverrides o;
    o.seed = seed;
    o.policy = policy;
    if (run_out) {
      o.out_dir = *run_out;
    }
    return cli::cmd_run(run_config, o);
  }
  if (*ablate) {
    std::optional<std::filesystem::path> out;
    if (ablate_out) {
      out = *ablate_out;
    }
    return cli::cmd_ablate(ablate_config, out, jobs);
  }
  std::optional<std::filesystem::path> out;
  if (eval_out) {
    out = *eval_out;
  }
  return cli::cmd_eval(result_path, gt_path, out);
}
