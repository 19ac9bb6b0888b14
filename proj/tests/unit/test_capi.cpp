#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include "compilot/compilot.h"
#include "testsupport.hpp"

using namespace compilot::testing;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  cp_string_free(s);
  return out;
}

struct Config {
  cp_config* c = nullptr;
  Config() { REQUIRE(cp_config_new(&c) == CP_OK); }
  ~Config() { cp_config_free(c); }
  void set(const char* k, const std::string& v) { REQUIRE_MESSAGE(cp_config_set(c, k, v.c_str()) == CP_OK, cp_last_error()); }
  std::string get(const char* k) {
    char* out = nullptr;
    REQUIRE(cp_config_get(c, k, &out) == CP_OK);
    return take(out);
  }
};

struct KernelHandle {
  cp_kernel* k = nullptr;
  explicit KernelHandle(const std::string& file) {
    REQUIRE(cp_kernel_load((corpus_dir() / file).c_str(), &k) == CP_OK);
  }
  ~KernelHandle() { cp_kernel_free(k); }
};

std::string check(const std::string& file, const std::string& schedule, int oracle = 0) {
  KernelHandle k(file);
  Config c;
  char* out = nullptr;
  REQUIRE(cp_check(k.k, schedule.c_str(), oracle, c.c, &out) == CP_OK);
  return take(out);
}

}  // namespace

TEST_CASE("errors and status codes") {
  cp_kernel* k = nullptr;
  CHECK(cp_kernel_parse("#pragma kernel x params(N=2)\nlong A[N];\nfor (int i = 0; i < N; i++)\n  A[i] = 1;\n", &k) ==
        CP_ERR_KERNEL_PARSE);
  CHECK(k == nullptr);
  CHECK(std::string(cp_last_error()).find("comp_ID") != std::string::npos);
  CHECK(cp_kernel_load("/nonexistent/kernel.c", &k) == CP_ERR_IO);
  CHECK(std::string(cp_last_error()).find("/nonexistent/kernel.c") != std::string::npos);
  CHECK(cp_kernel_parse(nullptr, &k) == CP_ERR_USAGE);
  REQUIRE(cp_kernel_load((corpus_dir() / "k02_stencil.c").c_str(), &k) == CP_OK);
  CHECK(std::string(cp_last_error()).empty());
  char* text = nullptr;
  REQUIRE(cp_kernel_print(k, &text) == CP_OK);
  CHECK(take(text).find("comp00") != std::string::npos);
  cp_kernel_free(k);
  CHECK(std::string(cp_version()).size() > 0);
}

TEST_CASE("last error is per thread") {
  cp_kernel* k = nullptr;
  CHECK(cp_kernel_load("/nonexistent/a.c", &k) == CP_ERR_IO);
  std::string other;
  std::thread([&] { other = cp_last_error(); }).join();
  CHECK(other.empty());
  CHECK(std::string(cp_last_error()).size() > 0);
}

TEST_CASE("configuration keys") {
  Config c;
  CHECK(c.get("orchestrator.max_iterations") == "30");
  CHECK(c.get("orchestrator.max_quit_pushes") == "5");
  CHECK(c.get("backend.mode") == "simulated");
  c.set("orchestrator.max_iterations", "12");
  CHECK(c.get("orchestrator.max_iterations") == "12");
  c.set("orchestrator.feedback_enabled", "false");
  CHECK(c.get("orchestrator.feedback_enabled") == "false");
  c.set("report.at", "0-3,10");
  CHECK(c.get("report.at") == "0,1,2,3,10");
  CHECK(cp_config_set(c.c, "no.such.key", "1") == CP_ERR_USAGE);
  CHECK(cp_config_set(c.c, "orchestrator.max_iterations", "many") == CP_ERR_USAGE);
  CHECK(cp_config_set(c.c, "backend.mode", "quantum") == CP_ERR_USAGE);
  char* keys = nullptr;
  REQUIRE(cp_config_keys(&keys) == CP_OK);
  std::string all = take(keys);
  for (const char* k : {"orchestrator.max_iterations", "provider.spec", "backend.compiler", "report.bestof"}) {
    CHECK(all.find(k) != std::string::npos);
  }
  char* json = nullptr;
  REQUIRE(cp_config_to_json(c.c, &json) == CP_OK);
  CHECK(take(json).find("\"max_iterations\": 12") != std::string::npos);
}

TEST_CASE("check") {
  CHECK(check("k02_stencil.c", "comp00.Parallelize(L0)").find("legality: Illegal") != std::string::npos);
  std::string skew = check("k06_seidel2d.c", "comp00.Skew(L1,L2)");
  CHECK(skew.find("legality: Legal") != std::string::npos);
  CHECK(skew.find("sigma=") != std::string::npos);
  std::string arity = check("k02_stencil.c", "comp00.Tile2D(L0,16,16)");
  CHECK(arity.find("validity: Invalid") != std::string::npos);
  CHECK(arity.find("wrong number of arguments") != std::string::npos);
  std::string oracle = check("k02_stencil.c", "comp00.Skew(L0,L1)+comp00.Interchange(L0,L1)+comp00.Parallelize(L1)", 1);
  CHECK(oracle.find("oracle: pass") != std::string::npos);
}

TEST_CASE("optimize, replay, campaign and report") {
  auto dir = scratch_dir("capi");
  KernelHandle k("k02_stencil.c");
  Config c;
  c.set("provider.spec", "scripted:" + (data_dir() / "stencil_golden.jsonl").string());
  c.set("orchestrator.max_quit_pushes", "1");
  char* summary = nullptr;
  auto record = dir / "run.jsonl";
  REQUIRE(cp_optimize(k.k, c.c, record.c_str(), &summary) == CP_OK);
  std::string s = take(summary);
  CHECK(s.find("iterations: 4") != std::string::npos);
  CHECK(slurp(record) == slurp(data_dir() / "stencil_golden.record.jsonl"));

  int identical = 0;
  REQUIRE(cp_replay(record.c_str(), (dir / "replayed.jsonl").c_str(), &identical, &summary) == CP_OK);
  take(summary);
  CHECK(identical == 1);
  CHECK(slurp(dir / "replayed.jsonl") == slurp(record));

  SUBCASE("transcript exhaustion aborts with the provider status") {
    Config short_script;
    short_script.set("provider.spec", "scripted:" + (data_dir() / "stencil_golden.jsonl").string());
    short_script.set("orchestrator.max_quit_pushes", "3");
    CHECK(cp_optimize(k.k, short_script.c, (dir / "short.jsonl").c_str(), &summary) == CP_ERR_PROVIDER);
    take(summary);
    CHECK(std::string(cp_last_error()).find("script exhausted") != std::string::npos);
  }

  SUBCASE("campaign resumes") {
    Config camp;
    camp.set("provider.spec", "scripted:" + (data_dir() / "stencil_golden.jsonl").string());
    camp.set("orchestrator.max_quit_pushes", "1");
    std::string kpath = (corpus_dir() / "k02_stencil.c").string();
    const char* paths[] = {kpath.c_str()};
    auto out = dir / "campaign";
    REQUIRE(cp_campaign(paths, 1, 3, 2, camp.c, out.c_str(), &summary) == CP_OK);
    CHECK(take(summary).find("completed: 3") != std::string::npos);
    REQUIRE(cp_campaign(paths, 1, 3, 2, camp.c, out.c_str(), &summary) == CP_OK);
    CHECK(take(summary).find("skipped: 3") != std::string::npos);

    Config rep;
    rep.set("report.at", "4");
    rep.set("report.bestof", "1,2");
    char* text = nullptr;
    REQUIRE(cp_report(out.c_str(), rep.c, (dir / "report").c_str(), &text) == CP_OK);
    CHECK(take(text).find("1 instance(s), 3 run record(s)") != std::string::npos);
    CHECK(slurp(dir / "report" / "per_instance.csv").find("stencil") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "report" / "aggregate.csv"));
  }
  std::filesystem::remove_all(dir);
}
