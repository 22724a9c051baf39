// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "memtrack/error.hpp"
#include "memtrack/serialization.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace memtrack;
using namespace memtrack::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("memtrack_cli_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run config parsing") {
  const RunConfig cfg = parse_run_config(
      R"({"scenario":"overlap","policy":"orm","seed":18446744073709551615,)"
      R"("bank":{"total_capacity":9},"proposer":{"branch_offsets":[0,-0.1,-0.2]},"out_dir":"x"})");
  CHECK(cfg.scenario == "overlap");
  CHECK(cfg.policy == PolicyKind::OrmOnly);
  CHECK(cfg.seed == 18446744073709551615ULL);
  CHECK(cfg.bank.total_capacity == 9);
  CHECK(cfg.bank.orm_capacity == 5);
  CHECK(cfg.proposer.branch_offsets[2] == -0.2);
  CHECK(cfg.out_dir == "x");

  CHECK(parse_run_config(R"({"scenario":"drift"})").policy == PolicyKind::MaSam2);
  CHECK_THROWS_AS(parse_run_config(R"({"policy":"ma"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"scenario":"drift","seeds":1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"scenario":"drift","seed":-1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"scenario":"drift","seed":1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"scenario":"drift","bank":{"orm":3}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"scenario":"drift","bank":{"orm_capacity":11}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"scenario":"drift","proposer":{"q_min":"0"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"scenario":"drift","proposer":{"branch_offsets":[0]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"scenario":"drift","policy":"bogus"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1]"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
}

TEST_CASE("ablate config parsing") {
  const AblateConfig cfg = parse_ablate_config(
      R"({"scenarios":["overlap","drift"],"seeds":[0,1],"policies":["ma","fifo"]})");
  CHECK(cfg.scenarios.size() == 2);
  CHECK(cfg.policies == std::vector<PolicyKind>{PolicyKind::MaSam2, PolicyKind::Fifo});
  CHECK(parse_ablate_config(R"({"scenarios":["a"],"seeds":[3]})").policies.size() == 4);
  CHECK_THROWS_AS(parse_ablate_config(R"({"scenarios":[],"seeds":[0]})"), ConfigError);
  CHECK_THROWS_AS(parse_ablate_config(R"({"scenarios":["a"],"seeds":[]})"), ConfigError);
  CHECK_THROWS_AS(parse_ablate_config(R"({"scenarios":["a"],"seeds":[0],"policies":["ma","ma"]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_ablate_config(R"({"scenarios":["a"],"seeds":[0],"jobs":4})"),
                  ConfigError);
}

TEST_CASE("canonical json ignores layout and out_dir") {
  const RunConfig a = parse_run_config(R"({"scenario":"overlap","seed":3,"out_dir":"a"})");
  const RunConfig b = parse_run_config("{ \"out_dir\": \"b\",\n \"seed\": 3, \"scenario\": \"overlap\" }");
  CHECK(canonical_json(a) == canonical_json(b));
  RunConfig c = a;
  c.seed = 4;
  CHECK(content_hash(canonical_json(a)) != content_hash(canonical_json(c)));
}

TEST_CASE("override sections") {
  BankConfig bank;
  apply_bank_overrides(bank, R"({"theta_iou":0.7})");
  CHECK(bank.theta_iou == 0.7);
  ProposerParams p;
  apply_proposer_overrides(p, R"({"sigma_iou":0})");
  CHECK(p.sigma_iou == 0.0);
  CHECK_THROWS_AS(apply_proposer_overrides(p, R"({"sigma":0})"), ConfigError);
}

TEST_CASE("resolve_scenario") {
  CHECK(resolve_scenario("reappearance").frame_count == 200);
  CHECK_THROWS_AS(resolve_scenario("missing-scenario"), ConfigError);
  TempDir dir("resolve");
  const auto path = dir.write("s.json", scenario_to_json(resolve_scenario("overlap")));
  CHECK(resolve_scenario(path.string()).frame_count == 270);
  const auto bad = dir.write("bad.json", R"({"dims":[4,4],"frame_count":2,"targets":[],"z":1})");
  try {
    resolve_scenario(bad.string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'z'") != std::string::npos);
  }
}

TEST_CASE("render") {
  TempDir dir("render");
  CHECK(cmd_render("reappearance", dir.path / "a") == kExitOk);
  CHECK(line_count(dir.path / "a" / "gt.jsonl") == 201);
  CHECK(cmd_render("reappearance", dir.path / "b") == kExitOk);
  CHECK(slurp(dir.path / "a" / "gt.jsonl") == slurp(dir.path / "b" / "gt.jsonl"));
  const auto bad = dir.write("bad.json", R"({"dims":[4,4],"frame_count":2,"targets":[)");
  CHECK(cmd_render(bad.string(), dir.path / "c") == kExitUsage);
  CHECK(cmd_render("nowhere", dir.path / "c") == kExitUsage);
}

TEST_CASE("run outputs and determinism") {
  TempDir dir("run");
  const auto cfg = dir.write(
      "run.json", "{\"scenario\":\"overlap\",\"policy\":\"ma\",\"seed\":0,\"out_dir\":\"" +
                      (dir.path / "one").string() + "\"}");
  CHECK(cmd_run(cfg) == kExitOk);
  RunOverrides o;
  o.out_dir = dir.path / "two";
  CHECK(cmd_run(cfg, o) == kExitOk);
  for (const char* f : {"result.jsonl", "metrics.csv", "bank_trace.jsonl", "gt.jsonl"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir.path / "one" / f));
    CHECK(slurp(dir.path / "one" / f) == slurp(dir.path / "two" / f));
  }
  CHECK(line_count(dir.path / "one" / "result.jsonl") == 271);
  const std::string csv = slurp(dir.path / "one" / "metrics.csv");
  CHECK(csv.rfind("# config_hash=", 0) == 0);
  CHECK(csv.find("\nma,overlap,0,") != std::string::npos);

  // Header hashes agree across files.
  std::ifstream res(dir.path / "one" / "result.jsonl");
  std::string header;
  std::getline(res, header);
  CHECK(header.find(csv.substr(14, 16)) != std::string::npos);

  o.out_dir = dir.path / "three";
  o.seed = 1;
  o.policy = "fifo";
  CHECK(cmd_run(cfg, o) == kExitOk);
  CHECK(slurp(dir.path / "three" / "metrics.csv").find("\nfifo,overlap,1,") != std::string::npos);
  CHECK(slurp(dir.path / "three" / "metrics.csv").substr(0, 30) != csv.substr(0, 30));
}

TEST_CASE("run exit codes") {
  TempDir dir("runerr");
  CHECK(cmd_run(dir.write("a.json", R"({"scenario":"overlap","policy":"bogus"})")) == kExitUsage);
  CHECK(cmd_run(dir.write("b.json", R"({"scenario":"not-a-scenario"})")) == kExitUsage);
  CHECK(cmd_run(dir.write("c.json", "{")) == kExitUsage);
  CHECK(cmd_run(dir.path / "absent.json") == kExitUsage);
  RunOverrides o;
  o.policy = "nope";
  CHECK(cmd_run(dir.write("d.json", R"({"scenario":"overlap"})"), o) == kExitUsage);
}

TEST_CASE("eval recomputes the run metrics") {
  TempDir dir("eval");
  const auto cfg = dir.write("run.json", "{\"scenario\":\"reappearance\",\"policy\":\"cam\",\"out_dir\":\"" +
                                             (dir.path / "r").string() + "\"}");
  REQUIRE(cmd_run(cfg) == kExitOk);
  CHECK(cmd_eval(dir.path / "r" / "result.jsonl", dir.path / "r" / "gt.jsonl", dir.path / "e") ==
        kExitOk);
  const std::string eval = slurp(dir.path / "e" / "eval.csv");
  const std::string csv = slurp(dir.path / "r" / "metrics.csv");
  const std::string row = csv.substr(csv.rfind("cam,reappearance,0,") + 19);
  const std::string metrics = eval.substr(eval.find('\n') + 1);
  CHECK(metrics.rfind(row.substr(0, row.size() - 1), 0) == 0);
  CHECK(cmd_eval(dir.path / "r" / "result.jsonl", dir.path / "missing", std::nullopt) ==
        kExitUsage);
  const auto trunc = dir.write("short.jsonl", "{\"frame\":0,\"masks\":{}}\n");
  CHECK(cmd_eval(trunc, dir.path / "r" / "gt.jsonl", std::nullopt) == kExitUsage);
}

TEST_CASE("ablate writes every artifact and is invariant to jobs") {
  TempDir dir("ablate");
  const auto cfg = dir.write(
      "abl.json", R"({"scenarios":["reappearance"],"seeds":[0,1],"policies":["fifo","ma"]})");
  CHECK(cmd_ablate(cfg, dir.path / "j1", 1) == kExitOk);
  CHECK(cmd_ablate(cfg, dir.path / "j3", 3) == kExitOk);
  for (const char* f : {"ablation.csv", "aggregate.json", "table.txt"}) {
    CAPTURE(f);
    CHECK(slurp(dir.path / "j1" / f) == slurp(dir.path / "j3" / f));
  }
  CHECK(line_count(dir.path / "j1" / "ablation.csv") == 2 + 4);
  CHECK_FALSE(fs::exists(dir.path / "j1" / "FAILED"));
}

TEST_CASE("ablate failures are flagged") {
  TempDir dir("ablatefail");
  // The only target sits off the grid, so no class is ever prompted and every cell fails.
  const auto offgrid = dir.write("s.json", R"({"dims":[16,16],"frame_count":4,"targets":[)"
                                           R"({"class_id":1,"shape":{"length":4,"radius":2},)"
                                           R"("waypoints":[[0,80,80,0]],"visible":[[0,4]],"z_order":0}]})");
  const auto cfg = dir.write("abl.json", "{\"scenarios\":[\"" + offgrid.string() +
                                             "\"],\"seeds\":[0]}");
  CHECK(cmd_ablate(cfg, dir.path / "out", 2) == kExitFailure);
  CHECK(fs::exists(dir.path / "out" / "FAILED"));
  CHECK(slurp(dir.path / "out" / "FAILED").find("scenario=s") != std::string::npos);
  const auto missing = dir.write("m.json", R"({"scenarios":["no-such"],"seeds":[0]})");
  CHECK(cmd_ablate(missing, dir.path / "bad", 1) == kExitUsage);
}

}
