#include <doctest.h>

#include <random>

#include "compilot/dependence.hpp"
#include "compilot/transform.hpp"
#include "testsupport.hpp"

using namespace compilot;
using namespace compilot::testing;

namespace {

// Every direct dependence is covered; every exact analytic dependence is a real conflict.
bool exact_match(const Kernel& k, std::string& why) {
  auto analytic = compute_dependences(k);
  auto brute = brute_force_dependences(k, DepSemantics::Direct);
  auto memory = brute_force_dependences(k, DepSemantics::Memory);
  for (const auto& b : brute) {
    if (!covers(analytic, b)) {
      why = "missed " + dump_dependences({b});
      return false;
    }
  }
  for (const auto& a : analytic) {
    bool all_exact = true;
    for (const auto& iv : a.distance) all_exact = all_exact && iv.is_exact();
    if (!all_exact) continue;
    if (std::find(memory.begin(), memory.end(), a) == memory.end()) {
      why = "spurious exact " + dump_dependences({a});
      return false;
    }
  }
  return true;
}

std::string verdict_name(const LegalityVerdict& v) {
  if (std::holds_alternative<Legal>(v)) return "Legal";
  if (std::holds_alternative<Illegal>(v)) return "Illegal";
  return "SolverFailure";
}

}  // namespace

TEST_CASE("reference dependences") {
  CHECK(dump_dependences(compute_dependences(corpus_kernel("k02_stencil.c"))) ==
        "comp00 comp00 flow (0,1)\ncomp00 comp00 flow (1,0)\n");
  CHECK(dump_dependences(compute_dependences(corpus_kernel("k03_antidiag.c"))) == "comp00 comp00 flow (1,-1)\n");
  std::string k1 = dump_dependences(compute_dependences(corpus_kernel("k01_matvec.c")));
  CHECK(k1.find("comp01 comp01 flow (0,1)") != std::string::npos);
  CHECK(k1.find("comp01 comp01 anti (0,1)") != std::string::npos);
  CHECK(k1.find("comp01 comp01 output (0,1)") != std::string::npos);
  CHECK(compute_dependences(corpus_kernel("k26_independent.c")).empty());
  CHECK(brute_force_dependences(corpus_kernel("k26_independent.c")).empty());
}

TEST_CASE("brute force on the reference kernels") {
  Kernel k2 = with_params(corpus_kernel("k02_stencil.c"), {{"N", 4}});
  CHECK(dump_dependences(brute_force_dependences(k2)) == "comp00 comp00 flow (0,1)\ncomp00 comp00 flow (1,0)\n");
  Kernel k3 = with_params(corpus_kernel("k03_antidiag.c"), {{"N", 4}});
  CHECK(dump_dependences(brute_force_dependences(k3)) == "comp00 comp00 flow (1,-1)\n");
  Kernel k1 = with_params(corpus_kernel("k01_matvec.c"), {{"N", 3}});
  std::string b1 = dump_dependences(brute_force_dependences(k1));
  CHECK(b1.find("comp01 comp01 flow (0,1)") != std::string::npos);
}

TEST_CASE("analytic dependences agree with enumeration on the corpus") {
  for (const auto& ck : load_corpus()) {
    std::string why;
    CHECK_MESSAGE(exact_match(ck.kernel, why),
                  ck.file << ": " << why);
  }
}

TEST_CASE("known verdicts") {
  Kernel k2 = corpus_kernel("k02_stencil.c");
  Kernel k3 = corpus_kernel("k03_antidiag.c");
  CHECK(verdict_name(check_legal(k2, parse_schedule("comp00.Parallelize(L0)"))) == "Illegal");
  CHECK(verdict_name(check_legal(k3, parse_schedule("comp00.Parallelize(L1)"))) == "Legal");
  CHECK(verdict_name(check_legal(k3, parse_schedule("comp00.Interchange(L0,L1)"))) == "Illegal");
  auto skew = check_legal(k2, parse_schedule("comp00.Skew(L0,L1)"));
  REQUIRE(std::holds_alternative<Legal>(skew));
  CHECK(std::get<Legal>(skew).solver_results[0].skew_factor == 1);
  CHECK(verdict_name(check_legal(
            k2, parse_schedule("comp00.Skew(L0,L1)+comp00.Interchange(L0,L1)+comp00.Parallelize(L1)"))) == "Legal");
  CHECK(verdict_name(check_legal(k2, parse_schedule("comp00.Reverse(L1)"))) == "Illegal");
}

TEST_CASE("semantic oracle") {
  SUBCASE("wavefront at N=6") {
    Kernel k2 = with_params(corpus_kernel("k02_stencil.c"), {{"N", 6}});
    auto c = assert_semantics_preserved(
        k2, parse_schedule("comp00.Skew(L0,L1)+comp00.Interchange(L0,L1)+comp00.Parallelize(L1)"), 7);
    CHECK_FALSE(c);
  }
  SUBCASE("matvec interchange") {
    Kernel k1 = corpus_kernel("k01_matvec.c");
    CHECK_FALSE(assert_semantics_preserved(k1, parse_schedule("comp01.Interchange(L0,L1)"), 7));
  }
  SUBCASE("injected illegal interchange is caught") {
    Kernel k3 = corpus_kernel("k03_antidiag.c");
    auto tk = apply_schedule(k3, parse_schedule("comp00.Interchange(L0,L1)"), {SolverResult{}});
    auto c = compare_semantics(k3, tk.kernel, 7);
    REQUIRE(c);
    CHECK(c->expected != c->actual);
  }
  SUBCASE("non-legal schedule rejected by the oracle entry point") {
    Kernel k2 = corpus_kernel("k02_stencil.c");
    CHECK_THROWS_AS(assert_semantics_preserved(k2, parse_schedule("comp00.Parallelize(L0)"), 7), std::logic_error);
  }
}

TEST_CASE("soundness of single transformations over the corpus") {
  int legal = 0;
  for (const auto& ck : load_corpus()) {
    for (const auto& s : single_transformations(ck.kernel)) {
      auto v = check_legal(ck.kernel, s);
      if (!std::holds_alternative<Legal>(v)) continue;
      ++legal;
      auto c = assert_semantics_preserved(ck.kernel, s, 7);
      CHECK_MESSAGE(!c, ck.file << " " << print_schedule(s) << " " << (c ? c->to_string() : ""));
    }
  }
  CHECK(legal > 100);
}

TEST_CASE("whole-schedule and incremental checking agree") {
  std::mt19937_64 rng(17);
  for (const auto& ck : load_corpus()) {
    for (const auto& s : random_multi_schedules(ck.kernel, rng, 4, 40)) {
      auto whole = check_legal(ck.kernel, s);
      std::size_t stop = s.commands.size();
      if (auto* i = std::get_if<Illegal>(&whole)) stop = i->command_index;
      if (auto* f = std::get_if<SolverFailure>(&whole)) stop = f->command_index;
      for (std::size_t n = 1; n <= s.commands.size(); ++n) {
        Schedule prefix{{s.commands.begin(), s.commands.begin() + n}};
        auto v = check_legal(ck.kernel, prefix);
        if (n <= stop) {
          CHECK_MESSAGE(std::holds_alternative<Legal>(v), ck.file << " " << print_schedule(prefix));
        } else {
          CHECK_MESSAGE(verdict_name(v) == verdict_name(whole), ck.file << " " << print_schedule(prefix));
        }
      }
    }
  }
}

TEST_CASE("legal multi-command schedules preserve semantics and instance counts") {
  std::mt19937_64 rng(23);
  for (const auto& ck : load_corpus()) {
    for (const auto& s : random_multi_schedules(ck.kernel, rng, 4, 40)) {
      auto v = check_legal(ck.kernel, s);
      auto* l = std::get_if<Legal>(&v);
      if (!l) continue;
      auto tk = apply_schedule(ck.kernel, s, l->solver_results);
      auto c = compare_semantics(ck.kernel, tk.kernel, 9);
      CHECK_MESSAGE(!c, ck.file << " " << print_schedule(s));
      std::uint64_t before = 0, after = 0;
      for (auto n : interpret_counting(ck.kernel, {}).instances) before += n;
      for (auto n : interpret_counting(tk.kernel, {}).instances) after += n;
      CHECK_MESSAGE(before == after, ck.file << " " << print_schedule(s));
    }
  }
}

TEST_CASE("interval arithmetic") {
  CHECK((Interval::exact(2) + Interval::exact(3)) == Interval::exact(5));
  CHECK((-Interval{1, 4}) == Interval{-4, -1});
  CHECK(Interval::star().scale(0) == Interval::exact(0));
  CHECK((Interval::at_least(1) + Interval::exact(-1)) == Interval::at_least(0));
  CHECK(Interval{-3, 5}.scale(-2) == Interval{-10, 6});
}
