#include <doctest.h>

#include <fstream>
#include <thread>

#include <sys/stat.h>

#include "compilot/backend.hpp"
#include "compilot/dependence.hpp"
#include "compilot/error.hpp"
#include "testsupport.hpp"

using namespace compilot;
using namespace compilot::testing;

namespace {

TransformedKernel legal_apply(const Kernel& k, const std::string& text) {
  Schedule s = parse_schedule(text);
  auto v = check_legal(k, s);
  REQUIRE(std::holds_alternative<Legal>(v));
  return apply_schedule(k, s, std::get<Legal>(v).solver_results);
}

// A "compiler" that copies a shell script into place as the binary.
BackendConfig script_backend(const std::filesystem::path& dir, const std::string& body) {
  auto script = dir / "fake.sh";
  std::ofstream(script) << "#!/bin/sh\n" << body << "\n";
  chmod(script.c_str(), 0755);
  BackendConfig cfg;
  cfg.mode = BackendMode::Real;
  cfg.compiler = "cp " + script.string() + " {bin}";
  cfg.timeout_s = 1;
  cfg.reps = 2;
  cfg.work_dir = dir / "work";
  return cfg;
}

Kernel transpose(std::int64_t n) { return with_params(corpus_kernel("k10_transpose.c"), {{"N", n}, {"M", n}}); }

}  // namespace

TEST_CASE("median") {
  CHECK(median_of({10, 11, 9, 12, 10}) == 10);
  CHECK(median_of({7.5}) == 7.5);
  CHECK(median_of({1, 2, 3, 4}) == 2.5);
  CHECK_THROWS_AS(median_of({}), std::invalid_argument);
}

TEST_CASE("simulated cost model") {
  CostModel m;
  SUBCASE("identity is instances times unit cost") {
    Kernel k1 = with_params(corpus_kernel("k01_matvec.c"), {{"N", 1000}});
    CHECK(simulate_cost(untransformed(k1), k1, m) == doctest::Approx(1001000 * 1e-6).epsilon(1e-12));
  }
  SUBCASE("parallel outer loop divides by the thread count") {
    Kernel k = transpose(1000);
    double base = simulate_cost(untransformed(k), k, m);
    CHECK(base == doctest::Approx(1e6 * 1e-6));
    double par = simulate_cost(legal_apply(k, "comp00.Parallelize(L0)"), k, m);
    CHECK(base / par == doctest::Approx(8.0));
    m.threads = 4;
    CHECK(simulate_cost(legal_apply(k, "comp00.Parallelize(L0)"), k, m) == doctest::Approx(base / 4));
  }
  SUBCASE("parallelism capped by the trip count") {
    Kernel k = with_params(corpus_kernel("k10_transpose.c"), {{"N", 3}, {"M", 50}});
    double base = simulate_cost(untransformed(k), k, m);
    CHECK(simulate_cost(legal_apply(k, "comp00.Parallelize(L0)"), k, m) == doctest::Approx(base / 3));
  }
  SUBCASE("locality factors") {
    Kernel k = transpose(64);
    double base = simulate_cost(untransformed(k), k, m);
    CHECK(simulate_cost(legal_apply(k, "comp00.Tile2D(L0,L1,16,16)"), k, m) == doctest::Approx(0.8 * base));
    CHECK(simulate_cost(legal_apply(k, "comp00.Unroll(L1,4)"), k, m) == doctest::Approx(0.95 * base));
    CHECK(simulate_cost(legal_apply(k, "comp00.Tile2D(L0,L1,16,16)+comp00.Parallelize(L0)"), k, m) ==
          doctest::Approx(0.8 * base / 4));
  }
  SUBCASE("fusion factor") {
    Kernel k = corpus_kernel("k14_atax.c");
    auto tk = legal_apply(k, "comp00.Fuse(comp01,L0)");
    CHECK(simulate_cost(tk, k, m) == doctest::Approx(0.9 * simulate_cost(untransformed(k), k, m)));
  }
  SUBCASE("deterministic") {
    Kernel k = corpus_kernel("k04_matmul.c");
    auto tk = legal_apply(k, "comp01.Parallelize(L0)+comp01.Tile2D(L1,L2,2,2)");
    CHECK(simulate_cost(tk, k, m) == simulate_cost(tk, k, m));
  }
}

TEST_CASE("simulated backend") {
  Kernel k = transpose(1000);
  Backend b(BackendConfig{});
  Measurement base = b.measure_baseline(k);
  CHECK(base.median_ms == doctest::Approx(1.0));
  auto r = b.run_schedule(legal_apply(k, "comp00.Parallelize(L0)"), k, base);
  REQUIRE(std::holds_alternative<BackendSuccess>(r));
  const auto& s = std::get<BackendSuccess>(r);
  CHECK(s.speedup == doctest::Approx(8.0));
  CHECK(s.speedup * s.time_ms == doctest::Approx(base.median_ms).epsilon(1e-9));
  CHECK(result_kind(r) == "success");
}

TEST_CASE("speedup arithmetic") {
  Kernel k = transpose(10);
  Backend b(BackendConfig{});
  Measurement base;
  base.median_ms = 10 * simulate_cost(untransformed(k), k, CostModel{});
  auto r = b.run_schedule(untransformed(k), k, base);
  REQUIRE(std::holds_alternative<BackendSuccess>(r));
  CHECK(std::get<BackendSuccess>(r).speedup == doctest::Approx(10.0));
}

TEST_CASE("config validation") {
  BackendConfig c;
  c.timeout_s = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.reps = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.model.threads = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("real backend failure classification" * doctest::timeout(120)) {
  auto dir = scratch_dir("backend");
  Kernel k = transpose(4);
  Measurement fake;
  fake.median_ms = 1;
  fake.checksum = 0x1234;
  SUBCASE("timeout") {
    Backend b(script_backend(dir, "sleep 5"));
    CHECK(std::holds_alternative<Timeout>(b.run_schedule(untransformed(k), k, fake)));
    CHECK_THROWS_AS(b.measure_baseline(k), BackendError);
  }
  SUBCASE("compiler crash") {
    auto cfg = script_backend(dir, "");
    cfg.compiler = "false {src} {bin}";
    Backend b(cfg);
    CHECK(result_kind(b.run_schedule(untransformed(k), k, fake)) == "compiler_crash");
  }
  SUBCASE("runtime crash") {
    Backend b(script_backend(dir, "echo boom >&2; exit 3"));
    auto r = b.run_schedule(untransformed(k), k, fake);
    CHECK(result_kind(r) == "runtime_crash");
    CHECK(result_message(r).find("boom") != std::string::npos);
  }
  SUBCASE("signal") {
    Backend b(script_backend(dir, "kill -SEGV $$"));
    CHECK(result_kind(b.run_schedule(untransformed(k), k, fake)) == "runtime_crash");
  }
  SUBCASE("missing output") {
    Backend b(script_backend(dir, "echo hello"));
    CHECK(result_message(b.run_schedule(untransformed(k), k, fake)).find("missing") != std::string::npos);
  }
  SUBCASE("checksum mismatch") {
    Backend b(script_backend(dir, "echo 'TIME_MS: 0.5'; echo 'CHECKSUM: 00000000000000ff'"));
    auto r = b.run_schedule(untransformed(k), k, fake);
    CHECK(result_kind(r) == "runtime_crash");
    CHECK(result_message(r).find("checksum") != std::string::npos);
  }
  SUBCASE("scripted success") {
    Backend b(script_backend(dir, "echo 'TIME_MS: 0.5'; echo 'CHECKSUM: 0000000000001234'"));
    auto r = b.run_schedule(untransformed(k), k, fake);
    REQUIRE(std::holds_alternative<BackendSuccess>(r));
    CHECK(std::get<BackendSuccess>(r).time_ms == doctest::Approx(0.5));
    CHECK(std::get<BackendSuccess>(r).speedup == doctest::Approx(2.0));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("timed runs never overlap" * doctest::timeout(120)) {
  auto dir = scratch_dir("overlap");
  std::filesystem::create_directories(dir / "a");
  std::filesystem::create_directories(dir / "b");
  auto before = timing_log().size();
  auto worker = [&](const std::string& sub) {
    Backend b(script_backend(dir / sub, "sleep 0.05; echo 'TIME_MS: 50'; echo 'CHECKSUM: 0000000000000001'"));
    for (int i = 0; i < 3; ++i) b.measure_baseline(transpose(2));
  };
  std::thread t1(worker, "a"), t2(worker, "b");
  t1.join();
  t2.join();
  auto log = timing_log();
  REQUIRE(log.size() >= before + 18);
  for (std::size_t i = 1; i < log.size(); ++i) {
    CHECK(log[i].sequence == log[i - 1].sequence + 1);
    CHECK(log[i].start >= log[i - 1].end);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("real compiler round trip" * doctest::timeout(300)) {
  if (std::system("cc --version >/dev/null 2>&1") != 0) {
    MESSAGE("cc not found; skipping");
    return;
  }
  BackendConfig cfg;
  cfg.mode = BackendMode::Real;
  cfg.reps = 1;
  cfg.timeout_s = 60;
  Backend b(cfg);
  Kernel k = corpus_kernel("k04_matmul.c");
  Measurement base = b.measure_baseline(k);
  REQUIRE(base.checksum);
  CHECK(base.median_ms > 0);
  auto r = b.run_schedule(legal_apply(k, "comp01.Interchange(L1,L2)+comp01.Parallelize(L0)"), k, base);
  REQUIRE_MESSAGE(std::holds_alternative<BackendSuccess>(r), result_message(r));
  const auto& s = std::get<BackendSuccess>(r);
  CHECK(s.speedup * s.time_ms == doctest::Approx(base.median_ms).epsilon(1e-9));
}
