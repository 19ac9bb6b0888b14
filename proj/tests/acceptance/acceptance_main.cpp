#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "compilot/backend.hpp"
#include "compilot/campaign.hpp"
#include "compilot/dependence.hpp"
#include "compilot/evalkit.hpp"
#include "compilot/orchestrator.hpp"
#include "compilot/prompts.hpp"
#include "compilot/run_record.hpp"
#include "compilot/transform.hpp"
#include "testsupport.hpp"

using namespace compilot;
using namespace compilot::testing;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::Skip, std::move(d)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string verdict_name(const LegalityVerdict& v) {
  if (std::holds_alternative<Legal>(v)) return "Legal";
  if (std::holds_alternative<Illegal>(v)) return "Illegal";
  return "SolverFailure";
}

std::string dep_mismatch(const Kernel& k) {
  auto analytic = compute_dependences(k);
  for (const auto& b : brute_force_dependences(k, DepSemantics::Direct))
    if (!covers(analytic, b)) return "missed " + dump_dependences({b});
  auto memory = brute_force_dependences(k, DepSemantics::Memory);
  for (const auto& a : analytic) {
    bool exact = std::all_of(a.distance.begin(), a.distance.end(), [](const auto& iv) { return iv.is_exact(); });
    if (exact && std::find(memory.begin(), memory.end(), a) == memory.end())
      return "spurious " + dump_dependences({a});
  }
  return "";
}

Outcome soundness() {
  auto t0 = std::chrono::steady_clock::now();
  auto corpus = load_corpus();
  if (corpus.size() < 20) return fail(fmt::format("corpus has {} kernels", corpus.size()));
  std::mt19937_64 rng(2024);
  int singles = 0, multis = 0, legal = 0;
  std::vector<std::string> violations;
  for (const auto& ck : corpus) {
    if (auto why = dep_mismatch(ck.kernel); !why.empty()) violations.push_back(ck.file + " deps: " + why);
    auto check = [&](const Schedule& s) {
      if (!std::holds_alternative<Legal>(check_legal(ck.kernel, s))) return;
      ++legal;
      if (auto c = assert_semantics_preserved(ck.kernel, s, 7))
        violations.push_back(ck.file + " " + print_schedule(s) + ": " + c->to_string());
    };
    for (const auto& s : single_transformations(ck.kernel)) {
      ++singles;
      check(s);
    }
    for (const auto& s : random_multi_schedules(ck.kernel, rng, 3, 40)) {
      ++multis;
      check(s);
    }
  }
  double secs = seconds_since(t0);
  std::string d = fmt::format("{} kernels, {} single + {} multi schedules, {} legal, {} violations, {:.1f}s",
                              corpus.size(), singles, multis, legal, violations.size(), secs);
  if (!violations.empty()) return fail(d + "; first: " + violations.front());
  if (multis < 50) return fail(d + "; fewer than 50 multi-command schedules");
  if (secs >= 300) return fail(d + "; over 300s");
  return pass(d);
}

Outcome known_verdicts() {
  Kernel k2 = corpus_kernel("k02_stencil.c");
  Kernel k3 = corpus_kernel("k03_antidiag.c");
  struct Case {
    const Kernel& k;
    const char* name;
    const char* schedule;
    const char* expected;
  };
  std::vector<Case> cases = {
      {k2, "K2", "comp00.Parallelize(L0)", "Illegal"},
      {k3, "K3", "comp00.Interchange(L0,L1)", "Illegal"},
      {k3, "K3", "comp00.Parallelize(L1)", "Legal"},
      {k2, "K2", "comp00.Skew(L0,L1)+comp00.Interchange(L0,L1)+comp00.Parallelize(L1)", "Legal"},
  };
  for (const auto& c : cases) {
    auto v = check_legal(c.k, parse_schedule(c.schedule));
    if (verdict_name(v) != c.expected)
      return fail(fmt::format("{} {}: {} (expected {})", c.name, c.schedule, verdict_name(v), c.expected));
  }
  auto skew = check_legal(k2, parse_schedule("comp00.Skew(L0,L1)"));
  auto sigma = std::get<Legal>(skew).solver_results.at(0).skew_factor.value_or(0);
  if (sigma != 1) return fail(fmt::format("K2 skew factor {}", sigma));
  return pass("4/4 verdicts, K2 skew factor 1");
}

Outcome round_trip() {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    Schedule s = random_schedule(rng);
    std::string text = print_schedule(s);
    if (!(parse_schedule(text) == s)) return fail("round trip failed for " + text);
  }
  Schedule a = parse_schedule("comp00.Skew(L1,L2)");
  Schedule b = parse_schedule("comp00.Tile2D(L0,L1,16,16)+comp00.Parallelize(L1)");
  bool ok_a = a.commands.size() == 1 &&
              a.commands[0] == Transformation{Skew{"comp00", LoopLevel::depth(1), LoopLevel::depth(2)}};
  bool ok_b = b.commands.size() == 2 &&
              b.commands[0] ==
                  Transformation{Tile2D{"comp00", {LoopLevel::depth(0), LoopLevel::depth(1)}, {16, 16}}} &&
              b.commands[1] == Transformation{Parallelize{"comp00", LoopLevel::depth(1)}};
  if (!ok_a || !ok_b) return fail("documented ASTs differ");
  return pass("10000 round trips, 2 documented ASTs");
}

Outcome best_of_k() {
  const std::vector<double> alphabet{1.0, 1.5, 2.25};
  long pools = 0;
  for (int n = 1; n <= 6; ++n) {
    std::vector<int> idx(n, 0);
    while (true) {
      std::vector<double> v;
      for (int i : idx) v.push_back(alphabet[i]);
      for (int K = 1; K <= 4; ++K) {
        if (best_of_k_exact(v, K) != brute_best_of_k(v, K))
          return fail(fmt::format("n={} K={} exact differs from enumeration", n, K));
      }
      ++pools;
      int pos = 0;
      while (pos < n && ++idx[pos] == static_cast<int>(alphabet.size())) idx[pos++] = 0;
      if (pos == n) break;
    }
  }
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    int n = 1 + static_cast<int>(rng() % 6);
    std::vector<double> v;
    for (int j = 0; j < n; ++j) v.push_back(1.0 + static_cast<double>(rng() % 1000) / 250.0);
    for (int K = 1; K <= 4; ++K)
      if (best_of_k_exact(v, K) != brute_best_of_k(v, K)) return fail("random pool: exact differs from enumeration");
  }
  for (int i = 0; i < 1000; ++i) {
    Pool p = random_pool(rng, 1 + static_cast<int>(rng() % 12), 8);
    for (int T = 0; T <= 8; ++T) {
      if (best_of_k_at(p, 1, T) != median_at(p, T)) return fail(fmt::format("pool {}: BestOf1@{} != median", i, T));
      if (median_at(p, T + 1) < median_at(p, T)) return fail(fmt::format("pool {}: median not monotone in T", i));
      for (int K = 1; K <= 4; ++K) {
        double b = best_of_k_at(p, K, T);
        if (best_of_k_at(p, K + 1, T) < b) return fail(fmt::format("pool {}: not monotone in K", i));
        if (best_of_k_at(p, K, T + 1) < b) return fail(fmt::format("pool {}: not monotone in T", i));
      }
    }
  }
  return pass(fmt::format("{} exhaustive pools (n<=6, K<=4) + 200 random exact, 1000 pools BestOf1/monotone", pools));
}

Outcome bootstrap() {
  std::mt19937_64 rng(150);
  std::vector<Pool> pools;
  for (int i = 0; i < 150; ++i) pools.push_back(random_pool(rng, 40, 30));
  auto t0 = std::chrono::steady_clock::now();
  auto e = bootstrap_ci(pools, 30, 1000, 42);
  double secs = seconds_since(t0);
  auto again = bootstrap_ci(pools, 30, 1000, 42);
  std::string d = fmt::format("point {:.4f} ci [{:.4f}, {:.4f}] in {:.2f}s", e.point, e.ci_low, e.ci_high, secs);
  if (secs >= 10) return fail(d + "; too slow");
  if (!(e.ci_low <= e.point && e.point <= e.ci_high)) return fail(d + "; not bracketed");
  if (again.ci_low != e.ci_low || again.ci_high != e.ci_high) return fail(d + "; not reproducible");
  Pool constant{"c", {}};
  for (int i = 0; i < 40; ++i) {
    RunSeries s;
    s.best = {1.0, 3.0};
    s.categories = {"success"};
    constant.runs.push_back(s);
  }
  auto c = bootstrap_ci(std::vector<Pool>(150, constant), 1, 1000, 42);
  if (c.point != 3.0 || c.ci_low != 3.0 || c.ci_high != 3.0) return fail(d + "; constant pools not zero width");
  return pass(d + ", constant pools zero width");
}

RunRecord run_golden(bool feedback) {
  OrchestratorConfig cfg;
  cfg.max_quit_pushes = 1;
  cfg.feedback_enabled = feedback;
  auto provider = ScriptedProvider::from_file(data_dir() / "stencil_golden.jsonl");
  Backend backend(cfg.backend);
  LogicalClock clock;
  Orchestrator o(corpus_kernel("k02_stencil.c"), cfg, *provider, backend, clock);
  return o.run();
}

Outcome golden_replay() {
  auto a = run_golden(true);
  auto b = run_golden(true);
  if (serialize(a) != serialize(b)) return fail("two runs differ");
  if (serialize(a) != slurp(data_dir() / "stencil_golden.record.jsonl")) return fail("differs from frozen record");
  if (!a.summary) return fail("no summary");
  std::map<std::string, int> count;
  int novel = 0;
  static const std::set<std::string> taxonomy{"success", "invalid", "illegal", "solver_failure", "crash"};
  for (const auto& e : a.exchanges) {
    ++count[e.category];
    if (e.novel) {
      ++novel;
      if (!taxonomy.count(e.category)) return fail("novel schedule with category " + e.category);
    }
  }
  if (count["unparseable"] != 1 || count["invalid"] != 1 || count["illegal"] != 1 || count["duplicate"] != 1 ||
      count["quit_push"] != 1 || count["success"] != 2)
    return fail("category counts differ");
  if (a.summary->iterations != 4 || novel != 4) return fail(fmt::format("T={}", a.summary->iterations));
  const auto& s = a.summary->best_series;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] < s[i - 1]) return fail("best-so-far decreases");
  return pass(fmt::format("{} exchanges byte-identical, T=4, best {:.2f}x, categories match",
                          a.exchanges.size(), a.summary->best_speedup));
}

Outcome no_feedback() {
  auto r = run_golden(false);
  int checked = 0;
  for (const auto& e : r.exchanges) {
    if (e.index < 2) continue;
    std::string lower = e.user;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    for (const auto& w : feedback_keywords())
      if (lower.find(w) != std::string::npos) return fail("keyword '" + w + "' in: " + e.user);
    if (std::any_of(e.user.begin(), e.user.end(), [](unsigned char ch) { return std::isdigit(ch); }))
      return fail("digit in: " + e.user);
    ++checked;
  }
  if (checked == 0) return fail("no post-context turns");
  return pass(fmt::format("{} post-context user turns carry no outcome", checked));
}

bool have_compiler() { return std::system("cc --version > /dev/null 2>&1") == 0; }

Outcome measured() {
  unsigned cores = std::thread::hardware_concurrency();
  if (cores < 4) return skip(fmt::format("host has {} core(s), needs 4", cores));
  if (!have_compiler()) return skip("no C compiler");
  Kernel k = parse_kernel(
      "#pragma kernel matmul params(N=1024)\n"
      "long C[N][N];\nlong A[N][N];\nlong B[N][N];\n\n"
      "// comp_ID: comp00\n"
      "for (int i = 0; i < N; i++)\n  for (int j = 0; j < N; j++)\n    for (int k = 0; k < N; k++)\n"
      "      C[i][j] += A[i][k] * B[k][j];\n");
  BackendConfig cfg;
  cfg.mode = BackendMode::Real;
  cfg.reps = 5;
  cfg.timeout_s = 300;
  cfg.threads = static_cast<int>(cores);
  Backend backend(cfg);
  Measurement base = backend.measure_baseline(k);
  Schedule s = parse_schedule("comp00.Parallelize(L0)");
  auto v = check_legal(k, s);
  if (!std::holds_alternative<Legal>(v)) return fail("Parallelize(L0) is not legal");
  auto r = backend.run_schedule(apply_schedule(k, s, std::get<Legal>(v).solver_results), k, base);
  if (!std::holds_alternative<BackendSuccess>(r)) return fail(result_kind(r) + ": " + result_message(r));
  double speedup = std::get<BackendSuccess>(r).speedup;
  std::string d = fmt::format("{} cores, baseline {:.1f} ms, speedup {:.2f}x, checksum match", cores,
                              base.median_ms, speedup);
  return speedup > 1.3 ? pass(d) : fail(d + "; needs > 1.3x");
}

Outcome tokens() {
  int exchanges = 0;
  for (const char* file : {"stencil_golden.record.jsonl", "matvec_five.record.jsonl"}) {
    auto rec = read_run_record(data_dir() / file);
    auto series = cumulative_token_series(rec);
    if (series.size() != rec.exchanges.size()) return fail(std::string(file) + ": series length");
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      sum += rec.exchanges[i].usage.total();
      if (series[i] != sum) return fail(fmt::format("{}: exchange {} cumulative {} != sum {}", file, i, series[i], sum));
      if (i > 0 && series[i] < series[i - 1]) return fail(std::string(file) + ": decreasing");
    }
    if (!rec.summary || rec.summary->tokens.total() != sum) return fail(std::string(file) + ": summary total");
    exchanges += static_cast<int>(series.size());
  }
  return pass(fmt::format("2 golden records, {} exchanges", exchanges));
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"legality soundness", soundness},     {"known verdicts", known_verdicts},
      {"schedule round trip", round_trip},   {"best-of-K statistics", best_of_k},
      {"bootstrap intervals", bootstrap},    {"golden replay", golden_replay},
      {"no-feedback ablation", no_feedback}, {"measured matmul speedup", measured},
      {"token accounting", tokens},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Skip ? "SKIP" : "FAIL";
    if (o.status == Status::Fail) ++failures;
    std::printf("[%s] %zu %s: %s\n", tag, i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
