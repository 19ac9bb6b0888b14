#include <doctest.h>

#include <random>

#include "compilot/error.hpp"
#include "compilot/kernel.hpp"
#include "testsupport.hpp"

using namespace compilot;
using namespace compilot::testing;

TEST_CASE("K1 parses into two computations") {
  Kernel k = corpus_kernel("k01_matvec.c");
  REQUIRE(k.computations.size() == 2);
  CHECK(k.computations[0].comp_id == "comp00");
  CHECK(k.computations[0].depth() == 1);
  CHECK(k.computations[1].comp_id == "comp01");
  CHECK(k.computations[1].depth() == 2);
  CHECK(parse_kernel(print_kernel(k)) == k);
}

TEST_CASE("K2 parses into one depth-2 computation") {
  Kernel k = corpus_kernel("k02_stencil.c");
  REQUIRE(k.computations.size() == 1);
  CHECK(k.computations[0].depth() == 2);
  CHECK(parse_kernel(print_kernel(k)) == k);
}

TEST_CASE("non-affine subscript is rejected with a position") {
  const char* src =
      "#pragma kernel bad params(N=4)\nlong buf0[N];\nfor (int a = 0; a < N; a++)\n  // comp_ID: comp00\n"
      "  buf0[a * a] = 1;\n";
  try {
    parse_kernel(src);
    FAIL("expected a parse error");
  } catch (const KernelParseError& e) {
    CHECK(std::string(e.what()).find("non-affine") != std::string::npos);
    CHECK(e.line() == 5);
  }
}

TEST_CASE("parse errors") {
  auto rejects = [](const std::string& body) {
    std::string src = "#pragma kernel bad params(N=4)\nlong A[N];\n" + body;
    CHECK_THROWS_AS(parse_kernel(src), KernelParseError);
  };
  rejects("for (int a = 0; a < N; a++)\n  A[a] = 1;\n");                           // missing comp_ID
  rejects("for (int a = 0; a < N; a += 2)\n  // comp_ID: comp00\n  A[a] = 1;\n");  // step
  rejects("for (int a = 0; a < N; a++)\n  // comp_ID: comp00\n  B[a] = 1;\n");     // undeclared
  rejects("for (int a = 0; a < N; a++)\n  // comp_ID: comp00\n  A[a][a] = 1;\n");  // rank
  rejects("for (int a = 0; a < N; a++) {\n  // comp_ID: comp00\n  A[a] = 1;\n  // comp_ID: comp00\n  A[a] = 2;\n}\n");
  rejects("for (int a = 0; a < N; a++)\n  // comp_ID: comp00\n  A[a] = 1.5;\n");
}

TEST_CASE("anonymization") {
  SUBCASE("renames iterators and buffers") {
    const char* src =
        "#pragma kernel mv params(N=3)\nlong A[N][N];\nlong x[N];\nlong y[N];\n"
        "for (int i = 0; i < N; i++)\n  for (int j = 0; j < N; j++)\n    // comp_ID: comp00\n"
        "    y[i] += A[i][j] * x[j];\n";
    auto an = anonymize(parse_kernel(src));
    const auto& c = an.kernel.computations[0];
    CHECK(c.loops[0].iterator == "a");
    CHECK(c.loops[1].iterator == "b");
    CHECK(an.buffer_names.at("buf0") == "y");
    CHECK(an.buffer_names.at("buf1") == "A");
    CHECK(an.buffer_names.at("buf2") == "x");
  }
  SUBCASE("first-occurrence order") {
    const char* src =
        "#pragma kernel t params(N=3)\nlong A[N];\nlong B[N];\nlong C[N];\n"
        "for (int i = 0; i < N; i++)\n  // comp_ID: comp00\n  C[i] = A[i] + B[i];\n";
    auto an = anonymize(parse_kernel(src));
    CHECK(an.buffer_names.at("buf0") == "C");
    CHECK(an.buffer_names.at("buf1") == "A");
    CHECK(an.buffer_names.at("buf2") == "B");
  }
  SUBCASE("idempotent over the corpus") {
    for (const auto& ck : load_corpus()) {
      auto once = anonymize(ck.kernel).kernel;
      CHECK_MESSAGE(anonymize(once).kernel == once, ck.file);
    }
  }
  SUBCASE("semantics preserved over the corpus") {
    for (const auto& ck : load_corpus()) {
      auto an = anonymize(ck.kernel);
      BufferData in = random_inputs(ck.kernel, 11);
      BufferData renamed;
      for (const auto& [nw, old] : an.buffer_names) renamed[nw] = in.at(old);
      BufferData a = interpret(ck.kernel, in);
      BufferData b = interpret(an.kernel, renamed);
      for (const auto& [nw, old] : an.buffer_names) CHECK_MESSAGE(b.at(nw) == a.at(old), ck.file);
    }
  }
}

TEST_CASE("render_for_prompt") {
  Kernel k1 = corpus_kernel("k01_matvec.c");
  std::string text = render_for_prompt(k1, 12.5);
  CHECK(text.find("// comp_ID: comp00") != std::string::npos);
  CHECK(text.find("12.5") != std::string::npos);
  CHECK_THROWS_AS(render_for_prompt(k1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(render_for_prompt(k1, -1.0), std::invalid_argument);

  Kernel k2 = corpus_kernel("k02_stencil.c");
  std::string t2 = render_for_prompt(k2, 100);
  auto open = t2.find("```c\n");
  REQUIRE(open != std::string::npos);
  auto close = t2.find("```", open + 5);
  REQUIRE(close != std::string::npos);
  CHECK(parse_kernel(t2.substr(open + 5, close - open - 5)) == k2);
}

TEST_CASE("interpreter") {
  SUBCASE("K1 at N=2") {
    Kernel k = with_params(corpus_kernel("k01_matvec.c"), {{"N", 2}});
    BufferData in{{"buf1", {1, 2, 3, 4}}, {"buf2", {1, 1}}};
    auto out = interpret(k, in);
    CHECK(out.at("buf0") == std::vector<std::int64_t>{3, 7});
  }
  SUBCASE("K2 at N=3 with border 1") {
    Kernel k = with_params(corpus_kernel("k02_stencil.c"), {{"N", 3}});
    BufferData in{{"buf0", {1, 1, 1, 1, 0, 0, 1, 0, 0}}};
    auto out = interpret(k, in).at("buf0");
    CHECK(out[1 * 3 + 1] == 2);
    CHECK(out[1 * 3 + 2] == 3);
    CHECK(out[2 * 3 + 1] == 3);
    CHECK(out[2 * 3 + 2] == 6);
  }
  SUBCASE("empty domain leaves buffers unchanged") {
    const char* src =
        "#pragma kernel e params(N=1)\nlong buf0[4];\nfor (int a = 0; a < N - 1; a++)\n  // comp_ID: comp00\n"
        "  buf0[a] = 9;\n";
    Kernel k = parse_kernel(src);
    BufferData in{{"buf0", {1, 2, 3, 4}}};
    CHECK(interpret(k, in).at("buf0") == in.at("buf0"));
  }
  SUBCASE("deterministic") {
    for (const auto& ck : load_corpus()) {
      auto in = random_inputs(ck.kernel, 3);
      CHECK_MESSAGE(interpret(ck.kernel, in) == interpret(ck.kernel, in), ck.file);
    }
  }
}

TEST_CASE("round trip over corpus and fuzzed kernels") {
  for (const auto& ck : load_corpus()) CHECK_MESSAGE(parse_kernel(print_kernel(ck.kernel)) == ck.kernel, ck.file);
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    std::string src = random_kernel_source(rng);
    Kernel k;
    REQUIRE_NOTHROW(k = parse_kernel(src));
    CHECK_MESSAGE(parse_kernel(print_kernel(k)) == k, src);
    auto an = anonymize(k).kernel;
    CHECK(anonymize(an).kernel == an);
    CHECK_NOTHROW(interpret(k, random_inputs(k, i)));
  }
}

TEST_CASE("instance counting agrees with the interpreter") {
  for (const auto& ck : load_corpus()) {
    auto counted = interpret_counting(ck.kernel, {}).instances;
    CHECK_MESSAGE(count_instances(ck.kernel) == counted, ck.file);
  }
}

TEST_CASE("kernel hash is stable across printing") {
  Kernel k = corpus_kernel("k04_matmul.c");
  CHECK(kernel_hash(k) == kernel_hash(parse_kernel(print_kernel(k))));
  CHECK(kernel_hash(k) != kernel_hash(with_params(k, {{"N", 5}})));
}
