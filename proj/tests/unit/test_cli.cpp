#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "testsupport.hpp"

using namespace compilot::testing;
namespace fs = std::filesystem;

namespace {

CommandResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), cli_path().string());
  return run_command(args);
}

std::string kernel(const std::string& file) { return (corpus_dir() / file).string(); }
std::string golden() { return "scripted:" + (data_dir() / "stencil_golden.jsonl").string(); }

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

nlohmann::json header(const fs::path& record) {
  std::ifstream f(record);
  std::string line;
  std::getline(f, line);
  return nlohmann::json::parse(line)["config"]["orchestrator"];
}

std::string turn(const std::string& text) {
  return nlohmann::json{{"type", "exchange"}, {"assistant", text}, {"usage", {{"input", 100}, {"output", 10}}}}.dump() +
         "\n";
}

}  // namespace

TEST_CASE("exit codes") {
  auto missing = cli({"check", "nope.c", "--schedule", "comp00.Parallelize(L0)"});
  CHECK(missing.status == 7);
  CHECK(missing.err.find("nope.c") != std::string::npos);

  CHECK(cli({}).status == 2);
  CHECK(cli({"check", kernel("k02_stencil.c"), "--bogus"}).status == 2);
  CHECK(cli({"--log-level", "loud", "check", kernel("k02_stencil.c"), "--schedule", "x"}).status == 2);
  CHECK(cli({"optimize", kernel("k02_stencil.c"), "--max-iters", "lots"}).status == 2);
  CHECK(cli({"--help"}).status == 0);
  CHECK(cli({"--version"}).status == 0);

  auto dir = scratch_dir("cli-exit");
  write(dir / "bad.c", "#pragma kernel bad params(N=4)\nlong A[N];\nfor (int i = 0; i < N; i++)\n  A[i * i] = 1;\n");
  auto parse = cli({"check", (dir / "bad.c").string(), "--schedule", "comp00.Parallelize(L0)"});
  CHECK(parse.status == 3);
  CHECK(parse.err.find("bad.c") != std::string::npos);

  auto exhausted = cli({"optimize", kernel("k02_stencil.c"), "--provider", golden(), "--max-quit-pushes", "4"});
  CHECK(exhausted.status == 4);
  CHECK(exhausted.out.find("complete: no") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("check output") {
  auto legal = cli({"check", kernel("k02_stencil.c"), "--schedule",
                    "comp00.Skew(L0,L1)+comp00.Interchange(L0,L1)+comp00.Parallelize(L1)", "--oracle"});
  REQUIRE(legal.status == 0);
  CHECK(legal.out.find("validity: Valid") != std::string::npos);
  CHECK(legal.out.find("legality: Legal") != std::string::npos);
  CHECK(legal.out.find("oracle: pass") != std::string::npos);

  auto illegal = cli({"check", kernel("k02_stencil.c"), "--schedule", "comp00.Parallelize(L0)"});
  CHECK(illegal.status == 0);
  CHECK(illegal.out.find("legality: Illegal") != std::string::npos);

  auto invalid = cli({"check", kernel("k02_stencil.c"), "--schedule", "comp07.Parallelize(L0)"});
  CHECK(invalid.status == 0);
  CHECK(invalid.out.find("validity: Invalid") != std::string::npos);
}

TEST_CASE("optimize writes the golden record") {
  auto dir = scratch_dir("cli-opt");
  auto r = cli({"optimize", kernel("k02_stencil.c"), "--provider", golden(), "--max-quit-pushes", "1", "--record",
                (dir / "run.jsonl").string()});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("iterations: 4") != std::string::npos);
  CHECK(r.out.find("terminal_reason: quit") != std::string::npos);
  CHECK(slurp(dir / "run.jsonl") == slurp(data_dir() / "stencil_golden.record.jsonl"));

  auto same = cli({"replay", (dir / "run.jsonl").string(), "--verify"});
  CHECK(same.status == 0);
  CHECK(same.out.find("identical: yes") != std::string::npos);

  std::string text = slurp(dir / "run.jsonl");
  auto pos = text.find("\"best_speedup\"");
  REQUIRE(pos != std::string::npos);
  text.insert(pos, "\"extra\":1,");
  write(dir / "edited.jsonl", text);
  auto differs = cli({"replay", (dir / "edited.jsonl").string(), "--verify"});
  CHECK(differs.status == 6);
  CHECK(differs.out.find("identical: no") != std::string::npos);

  CHECK(cli({"replay", (dir / "absent.jsonl").string()}).status == 7);
  fs::remove_all(dir);
}

TEST_CASE("flags, config file and defaults") {
  auto dir = scratch_dir("cli-config");
  auto run = [&](std::vector<std::string> extra, const std::string& name) {
    std::vector<std::string> args = {"optimize", kernel("k02_stencil.c"), "--provider", golden(), "--record",
                                     (dir / name).string()};
    args.insert(args.begin(), extra.begin(), extra.end());
    auto r = cli(args);
    // pushes > 1 exhaust the script; the header is written regardless
    CHECK(fs::exists(dir / name));
    return header(dir / name);
  };

  auto defaults = run({}, "defaults.jsonl");
  CHECK(defaults["max_iterations"] == 30);
  CHECK(defaults["max_quit_pushes"] == 5);
  CHECK(defaults["feedback_enabled"] == true);

  write(dir / "good.toml", "version = 1\n[optimize]\nmax-iters = 12\nmax-quit-pushes = 1\nno-feedback = true\n");
  auto from_file = run({"--config", (dir / "good.toml").string()}, "file.jsonl");
  CHECK(from_file["max_iterations"] == 12);
  CHECK(from_file["max_quit_pushes"] == 1);
  CHECK(from_file["feedback_enabled"] == false);

  std::vector<std::string> both = {"optimize", kernel("k02_stencil.c"), "--provider", golden(),
                                   "--max-iters",  "30", "--max-quit-pushes", "5", "--record",
                                   (dir / "flags.jsonl").string()};
  both.insert(both.begin(), {"--config", (dir / "good.toml").string()});
  cli(both);
  auto flagged = header(dir / "flags.jsonl");
  CHECK(flagged["max_iterations"] == 30);
  CHECK(flagged["max_quit_pushes"] == 5);
  CHECK(flagged["feedback_enabled"] == false);

  write(dir / "unversioned.toml", "[optimize]\nmax-iters = 12\n");
  auto r = cli({"--config", (dir / "unversioned.toml").string(), "check", kernel("k02_stencil.c"), "--schedule", "x"});
  CHECK(r.status == 2);
  CHECK(r.err.find("version") != std::string::npos);

  write(dir / "v2.toml", "version = 2\n");
  CHECK(cli({"--config", (dir / "v2.toml").string(), "check", kernel("k02_stencil.c"), "--schedule", "x"}).status == 2);
  fs::remove_all(dir);
}

TEST_CASE("campaign and report") {
  auto dir = scratch_dir("cli-report");
  auto scripts = dir / "scripts";
  fs::create_directories(scripts);
  fs::copy_file(data_dir() / "stencil_golden.jsonl", scripts / "k02_stencil.r0.jsonl");
  write(scripts / "k02_stencil.r1.jsonl", turn("analysis") + turn("<schedule>comp00.Tile2D(L0,L1,2,2)</schedule>") +
                                              turn("no_further_transformations") + turn("no_further_transformations"));
  write(scripts / "k02_stencil.r2.jsonl",
        turn("analysis") + turn("no_further_transformations") + turn("no_further_transformations"));

  auto out = (dir / "runs").string();
  auto camp = cli({"campaign", kernel("k02_stencil.c"), "--runs", "3", "--jobs", "2", "--provider",
                   "scripted:" + scripts.string(), "--max-quit-pushes", "1", "--out", out});
  REQUIRE_MESSAGE(camp.status == 0, camp.err);
  CHECK(camp.out.find("completed: 3") != std::string::npos);
  auto again = cli({"campaign", kernel("k02_stencil.c"), "--runs", "3", "--provider", "scripted:" + scripts.string(),
                    "--max-quit-pushes", "1", "--out", out});
  CHECK(again.out.find("skipped: 3") != std::string::npos);

  // best-so-far series: r0 [1,1,1,1.25,1.8], r1 [1,1.25], r2 [1]
  auto rep = cli({"report", out, "--at", "1,5", "--bestof", "2", "--out", (dir / "a").string()});
  REQUIRE_MESSAGE(rep.status == 0, rep.err);
  std::string per = slurp(dir / "a" / "per_instance.csv");
  CHECK(per.find("stencil,1,3,1.000000,") != std::string::npos);
  CHECK(per.find("stencil,5,3,1.250000,") != std::string::npos);

  for (const char* name : {"b1", "b2"}) {
    auto r = cli({"report", out, "--bootstrap", "1000", "--seed", "42", "--out", (dir / name).string()});
    CHECK(r.status == 0);
  }
  CHECK(slurp(dir / "b1" / "aggregate.csv") == slurp(dir / "b2" / "aggregate.csv"));
  CHECK(slurp(dir / "b1" / "per_instance.csv") == slurp(dir / "b2" / "per_instance.csv"));

  CHECK(cli({"report", (dir / "empty").string()}).status != 0);
  fs::remove_all(dir);
}
