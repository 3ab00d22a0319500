#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "json.hpp"

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "soc-cli-XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    path = tmpl;
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CliResult run_cli(const TempDir& dir, const std::string& args,
                  const std::string& env = "") {
  const std::string out = dir.file(".stdout"), err = dir.file(".stderr");
  std::string cmd = env.empty() ? "" : env + " ";
  cmd += std::string(SOC_CLI_PATH) + " " + args + " > " + out + " 2> " + err;
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char ch : text) n += ch == '\n';
  return n;
}

// Two far disks plus a few outliers: small enough for fast process-level runs.
void write_mini_recipe(const std::string& path) {
  std::ofstream out(path);
  out << R"({
    "format": "soc-recipe-v1",
    "name": "cli-mini",
    "shapes": [
      {"kind": "strokes", "polylines": [[[0.0, 0.0]]], "thickness": 0.3},
      {"kind": "strokes", "polylines": [[[2.0, 0.0]]], "thickness": 0.3}
    ],
    "core_counts": [40, 40],
    "outliers": 10,
    "outlier_margin": 0.2,
    "outlier_extent": 0.5,
    "default_seed": 1
  })";
}

const std::string kRunParams = "--radius 0.5 --alpha 0.05 --seed 1";

} // namespace

TEST_CASE("generate writes a deterministic labeled stream") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));

  auto r1 = run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                             dir.file("a.jsonl"));
  REQUIRE(r1.code == 0);
  CHECK(r1.out.find("wrote 90 points (dim 2)") != std::string::npos);
  CHECK(line_count(slurp(dir.file("a.jsonl"))) == 90);

  auto r2 = run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                             dir.file("b.jsonl"));
  REQUIRE(r2.code == 0);
  CHECK(slurp(dir.file("a.jsonl")) == slurp(dir.file("b.jsonl")));

  auto r3 = run_cli(dir, "generate " + dir.file("mini.json") + " --seed 5 --out " +
                             dir.file("c.jsonl"));
  REQUIRE(r3.code == 0);
  CHECK(slurp(dir.file("a.jsonl")) != slurp(dir.file("c.jsonl")));
}

TEST_CASE("generate --stats reports the separation figures") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));
  auto r = run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                            dir.file("a.jsonl") + " --stats --stat-probes 200");
  REQUIRE(r.code == 0);
  const auto brace = r.out.find('{');
  REQUIRE(brace != std::string::npos);
  auto j = nlohmann::json::parse(r.out.substr(brace));
  CHECK(j.at("delta").get<double>() > 1.0); // gap between the disks
  CHECK(j.at("s_estimate").get<std::size_t>() >= 1);
  CHECK(j.contains("p_f"));
  CHECK(j.contains("Gamma"));
  CHECK(j.contains("gamma"));
}

TEST_CASE("run emits one assignment line per point, reproducibly") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));
  REQUIRE(run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                           dir.file("s.jsonl"))
              .code == 0);

  auto r1 = run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                             dir.file("a1.jsonl") + " " + kRunParams);
  REQUIRE(r1.code == 0);
  CHECK(r1.out.find("processed 90 points") != std::string::npos);
  CHECK(line_count(slurp(dir.file("a1.jsonl"))) == 91); // header + events

  auto r2 = run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                             dir.file("a2.jsonl") + " " + kRunParams);
  REQUIRE(r2.code == 0);
  CHECK(slurp(dir.file("a1.jsonl")) == slurp(dir.file("a2.jsonl")));

  // The kernel knob must not change a single output byte.
  auto r3 = run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                             dir.file("a3.jsonl") + " " + kRunParams +
                             " --serial-scan");
  REQUIRE(r3.code == 0);
  CHECK(slurp(dir.file("a1.jsonl")) == slurp(dir.file("a3.jsonl")));
}

TEST_CASE("an interrupted run resumes into the identical log") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));
  REQUIRE(run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                           dir.file("s.jsonl"))
              .code == 0);

  REQUIRE(run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                           dir.file("full.jsonl") + " " + kRunParams)
              .code == 0);
  REQUIRE(run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                           dir.file("head.jsonl") + " " + kRunParams +
                           " --limit 30 --snapshot-out " + dir.file("snap.json"))
              .code == 0);
  REQUIRE(run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                           dir.file("tail.jsonl") + " --resume " +
                           dir.file("snap.json"))
              .code == 0);

  // head events + tail events == full events, including the shared header.
  std::istringstream head(slurp(dir.file("head.jsonl")));
  std::istringstream tail(slurp(dir.file("tail.jsonl")));
  std::istringstream full(slurp(dir.file("full.jsonl")));
  std::vector<std::string> head_lines, tail_lines, full_lines;
  for (std::string l; std::getline(head, l);) head_lines.push_back(l);
  for (std::string l; std::getline(tail, l);) tail_lines.push_back(l);
  for (std::string l; std::getline(full, l);) full_lines.push_back(l);

  REQUIRE(head_lines.size() == 31);
  REQUIRE(tail_lines.size() == 61);
  REQUIRE(full_lines.size() == 91);
  CHECK(head_lines[0] == full_lines[0]);
  CHECK(tail_lines[0] == full_lines[0]);
  std::vector<std::string> stitched(head_lines);
  stitched.insert(stitched.end(), tail_lines.begin() + 1, tail_lines.end());
  CHECK(stitched == full_lines);
}

TEST_CASE("resume refuses explicit engine parameters") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));
  REQUIRE(run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                           dir.file("s.jsonl"))
              .code == 0);
  REQUIRE(run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                           dir.file("h.jsonl") + " " + kRunParams +
                           " --limit 10 --snapshot-out " + dir.file("snap.json"))
              .code == 0);

  auto r = run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                            dir.file("t.jsonl") + " --resume " +
                            dir.file("snap.json") + " --alpha 0.5");
  CHECK(r.code == 1);
  CHECK(r.err.find("--resume") != std::string::npos);
}

TEST_CASE("eval scores a run and writes report and trajectory files") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));
  REQUIRE(run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                           dir.file("s.jsonl"))
              .code == 0);
  REQUIRE(run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                           dir.file("a.jsonl") + " " + kRunParams)
              .code == 0);

  auto r = run_cli(dir, "eval --assign " + dir.file("a.jsonl") + " --stream " +
                            dir.file("s.jsonl") + " --report-out " +
                            dir.file("report.json") + " --trajectory-out " +
                            dir.file("traj.csv") + " --micros 4.5");
  REQUIRE(r.code == 0);

  auto j = nlohmann::json::parse(slurp(dir.file("report.json")));
  CHECK(j.at("format") == "soc-report-v1");
  const double purity = j.at("purity").get<double>();
  CHECK(purity > 0.0);
  CHECK(purity <= 1.0);
  CHECK(j.at("final_cluster_count").get<std::size_t>() >= 2);
  CHECK(j.at("micros_per_point").get<double>() == 4.5);
  CHECK(j.at("params").at("alpha").get<double>() == 0.05);

  const std::string csv = slurp(dir.file("traj.csv"));
  CHECK(csv.rfind("point_index,clusters\n", 0) == 0);
  CHECK(line_count(csv) >= 2);

  // Stdout carries the same report document.
  CHECK(r.out.find("\"format\": \"soc-report-v1\"") != std::string::npos);
}

TEST_CASE("usage problems exit 1, data problems exit 2") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));

  CHECK(run_cli(dir, "--help").code == 0);
  CHECK(run_cli(dir, "").code == 1);              // subcommand required
  CHECK(run_cli(dir, "frobnicate").code == 1);    // unknown subcommand
  CHECK(run_cli(dir, "generate").code == 1);      // missing required args
  CHECK(run_cli(dir, "generate " + dir.file("mini.json") + " --out x --bogus")
            .code == 1);

  CHECK(run_cli(dir, "generate " + dir.file("absent.json") + " --out " +
                         dir.file("x.jsonl"))
            .code == 2);

  {
    std::ofstream bad(dir.file("bad.jsonl"));
    bad << "{oops\n";
  }
  CHECK(run_cli(dir, "run " + dir.file("bad.jsonl") + " --out " +
                         dir.file("a.jsonl") + " " + kRunParams)
            .code == 2);

  CHECK(run_cli(dir, "run " + dir.file("nope.jsonl") + " --out " +
                         dir.file("a.jsonl") + " " + kRunParams)
            .code == 2);

  // Invalid engine parameters are usage errors.
  {
    std::ofstream ok(dir.file("ok.jsonl"));
    ok << R"({"x":[0.0,0.0]})" << "\n";
  }
  CHECK(run_cli(dir, "run " + dir.file("ok.jsonl") + " --out " +
                         dir.file("a.jsonl") + " --alpha 2.0 --radius 0.5")
            .code == 1);

  // Stream/assignment length mismatch is a data error.
  REQUIRE(run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                           dir.file("s.jsonl"))
              .code == 0);
  REQUIRE(run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                           dir.file("a.jsonl") + " " + kRunParams)
              .code == 0);
  auto mismatch = run_cli(dir, "eval --assign " + dir.file("a.jsonl") +
                                   " --stream " + dir.file("ok.jsonl"));
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("length mismatch") != std::string::npos);
}

TEST_CASE("an empty stream still yields a valid log and snapshot") {
  TempDir dir;
  std::ofstream(dir.file("empty.jsonl")) << "";
  auto r = run_cli(dir, "run " + dir.file("empty.jsonl") + " --out " +
                            dir.file("a.jsonl") + " " + kRunParams +
                            " --snapshot-out " + dir.file("snap.json"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("processed 0 points") != std::string::npos);

  const std::string log = slurp(dir.file("a.jsonl"));
  CHECK(line_count(log) == 1); // header only
  CHECK(log.find("soc-assign-v1") != std::string::npos);

  auto snap = nlohmann::json::parse(slurp(dir.file("snap.json")));
  CHECK(snap.at("format") == "soc-snapshot-v1");
  CHECK(snap.at("points_seen") == 0);
  CHECK(snap.at("clusters").empty());
}

TEST_CASE("relative outputs land under SOC_OUT_DIR") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));
  std::filesystem::create_directory(dir.path / "redirect");

  auto r = run_cli(dir, "generate " + dir.file("mini.json") + " --out rel.jsonl",
                   "SOC_OUT_DIR=" + (dir.path / "redirect").string());
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir.path / "redirect" / "rel.jsonl"));

  // Absolute paths ignore the redirect.
  auto r2 = run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                             dir.file("abs.jsonl"),
                    "SOC_OUT_DIR=" + (dir.path / "redirect").string());
  REQUIRE(r2.code == 0);
  CHECK(std::filesystem::exists(dir.path / "abs.jsonl"));
  CHECK_FALSE(std::filesystem::exists(dir.path / "redirect" / "abs.jsonl"));
}

TEST_CASE("run meta sidecar keeps timing out of the assignment log") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));
  REQUIRE(run_cli(dir, "generate " + dir.file("mini.json") + " --out " +
                           dir.file("s.jsonl"))
              .code == 0);
  auto r = run_cli(dir, "run " + dir.file("s.jsonl") + " --out " +
                            dir.file("a.jsonl") + " " + kRunParams +
                            " --meta-out " + dir.file("meta.json"));
  REQUIRE(r.code == 0);

  auto meta = nlohmann::json::parse(slurp(dir.file("meta.json")));
  CHECK(meta.at("points") == 90);
  CHECK(meta.at("micros_per_point").get<double>() > 0.0);
  CHECK(meta.at("max_skeleton").get<std::size_t>() >= 1);
  CHECK(meta.at("final_clusters").get<std::size_t>() >= 2);
  CHECK(meta.contains("parallel_scan"));

  CHECK(slurp(dir.file("a.jsonl")).find("micros") == std::string::npos);
}

TEST_CASE("bench prints a kernel-by-mode table") {
  TempDir dir;
  write_mini_recipe(dir.file("mini.json"));
  auto r = run_cli(dir, "bench " + dir.file("mini.json") +
                            " --min-points 300 " + kRunParams);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("benchmark stream: 360 points") != std::string::npos);
  CHECK(r.out.find("split  scan") != std::string::npos);
  CHECK(r.out.find("serial") != std::string::npos);
  // Four configuration rows, parallel ones possibly marked unavailable.
  CHECK(line_count(r.out) >= 6);
}
