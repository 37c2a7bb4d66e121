// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "seal/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result seal_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = seal::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Runs the installed binary so the real process exit status is observed.
int seal_exec(const std::string& args) {
  const std::string cmd = std::string(SEAL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("seal_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* kTinyConfig = R"({
  "train": {"epochs": 2, "batch_size": 16},
  "model": {"hidden": [16], "proj_dim": 12},
  "data": {"counts": [2, 4, 8], "per_class": 8, "dim": 8}
})";

}  // namespace

TEST_CASE("missing config names the path and exits 1") {
  const auto dir = scratch("missing");
  const auto r = seal_run({"train", "--config", "/nonexistent/cfg.json", "--out", (dir / "run").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("/nonexistent/cfg.json") != std::string::npos);
  CHECK(seal_exec("train --config /nonexistent/cfg.json --out " + (dir / "run").string()) == 1);
  CHECK(seal_exec("no-such-command") == 1);
}

TEST_CASE("bad config key is exit 1 naming the key") {
  const auto dir = scratch("badkey");
  write_text(dir / "c.json", R"({"train": {"epochz": 3}})");
  const auto r = seal_run({"train", "--config", (dir / "c.json").string(), "--out", (dir / "run").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("epochz") != std::string::npos);
}

TEST_CASE("generate is byte-identical for a fixed seed") {
  const auto dir = scratch("generate");
  const std::vector<std::string> base{"generate", "--counts", "2,4", "--per-class", "5", "--dim", "6", "--seed", "3"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", (dir / "a").string()});
  b.insert(b.end(), {"--out", (dir / "b").string()});
  REQUIRE(seal_run(a).code == 0);
  REQUIRE(seal_run(b).code == 0);
  CHECK(slurp(dir / "a" / "features.csv") == slurp(dir / "b" / "features.csv"));
  CHECK(slurp(dir / "a" / "hierarchy.json") == slurp(dir / "b" / "hierarchy.json"));
  CHECK(seal_run({"generate", "--counts", "2,x", "--out", (dir / "c").string()}).code == 1);
}

TEST_CASE("verify-theory succeeds") {
  const auto r = seal_run({"verify-theory", "--trials", "100", "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("chain_rule") != std::string::npos);
  CHECK(seal_exec("verify-theory --trials 20 --seed 1") == 0);
}

TEST_CASE("train, report and eval on a tiny run") {
  const auto dir = scratch("train");
  write_text(dir / "c.json", kTinyConfig);
  const fs::path run = dir / "run";
  REQUIRE(seal_run({"train", "--config", (dir / "c.json").string(), "--out", run.string(), "--deterministic"}).code == 0);
  for (const char* f : {"metrics.jsonl", "config.json", "final.json", "predictions.csv", "truth.csv", "hierarchy.json",
                        "model.seal", "model.seal.json"})
    CHECK(fs::exists(run / f));

  std::ifstream metrics(run / "metrics.jsonl");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(metrics, line)) {
    const json j = json::parse(line);
    ++rows;
    CHECK(j.at("epoch") == rows);
  }
  CHECK(rows == 2);

  REQUIRE(seal_run({"report", run.string()}).code == 0);
  const json summary = json::parse(slurp(run / "summary.json"));
  CHECK(summary.at("epochs") == 2);
  CHECK(summary.at("consistency").size() == 2);
  const std::string curves = slurp(run / "curves.csv");
  CHECK(std::count(curves.begin(), curves.end(), '\n') == 3);

  const auto ev = seal_run({"eval", "--pred", (run / "predictions.csv").string(), "--truth", (run / "truth.csv").string(),
                            "--hierarchy", (run / "hierarchy.json").string()});
  REQUIRE(ev.code == 0);
  const json report = json::parse(ev.out);
  const json fin = json::parse(slurp(run / "final.json")).at("unlabelled");
  CHECK(report.at("acc_all") == fin.at("acc_all"));
  CHECK(report.at("consistency") == fin.at("consistency"));

  const auto dump = seal_run({"eval", "--pred", (run / "predictions.csv").string(), "--truth",
                              (dir / "c.json").string(), "--hierarchy", (run / "hierarchy.json").string()});
  CHECK(dump.code == 1);
}

TEST_CASE("report errors") {
  const auto dir = scratch("report");
  write_text(dir / "metrics.jsonl", "");
  auto r = seal_run({"report", dir.string()});
  CHECK(r.code == 1);
  write_text(dir / "metrics.jsonl", R"({"epoch":1,"loss":{},"unlabelled":{}})" "\n{broken\n");
  r = seal_run({"report", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 2") != std::string::npos);
  CHECK(seal_run({"report", (dir / "nothing").string()}).code == 1);
}

TEST_CASE("thread resolution") {
  CHECK(seal::resolve_threads(4, true) == 1);
  CHECK(seal::resolve_threads(3, false) >= 1);
}
