#include <fmt/format.h>

#include "compilot/transform.hpp"

namespace compilot {

namespace {

std::string c_affine(const AffineExpr& e) { return "(" + e.to_string() + ")"; }

std::string c_term(const BoundTerm& t) {
  if (t.divisor == 1) return c_affine(t.numerator);
  return fmt::format("cp_floord({}, {})", c_affine(t.numerator), t.divisor);
}

std::string c_bound(const Bound& b, bool lower) {
  std::string acc = c_term(b.terms.back());
  for (std::size_t i = b.terms.size() - 1; i-- > 0;) {
    acc = fmt::format("{}({}, {})", lower ? "cp_max" : "cp_min", c_term(b.terms[i]), acc);
  }
  return acc;
}

class Emitter {
 public:
  Emitter(const TransformedKernel& tk, const EmitOptions& opt) : k_(tk.kernel), opt_(opt) {
    integer_ = true;
    for (const auto& b : k_.buffers) integer_ = integer_ && b.type == ScalarType::Long;
  }

  std::string run() {
    out_ += fmt::format("/* kernel {} */\n", k_.name);
    out_ += "#include <stdint.h>\n#include <stdio.h>\n#include <string.h>\n#include <time.h>\n\n";
    for (const auto& p : k_.params) out_ += fmt::format("#define {} {}L\n", p.name, p.value);
    out_ += R"(
static inline long cp_floord(long n, long d) { return n >= 0 ? n / d : -((-n + d - 1) / d); }
static inline long cp_max(long a, long b) { return a > b ? a : b; }
static inline long cp_min(long a, long b) { return a < b ? a : b; }
static inline uint64_t cp_sdiv(uint64_t a, uint64_t b) {
  int64_t x = (int64_t)a, y = (int64_t)b;
  if (y == 0) return 0;
  if (y == -1) return (uint64_t)0 - a;
  return (uint64_t)(x / y);
}

)";
    for (const auto& b : k_.buffers) {
      out_ += fmt::format("static {} {}", b.type == ScalarType::Long ? "uint64_t" : "double", b.name);
      for (const auto& e : b.extents) out_ += "[" + e.to_string() + "]";
      out_ += ";\n";
    }
    out_ += "\nstatic void init_buffers(void) {\n";
    for (std::size_t i = 0; i < k_.buffers.size(); ++i) {
      const auto& b = k_.buffers[i];
      std::string count = "1";
      for (const auto& e : b.extents) count += " * (long)(" + e.to_string() + ")";
      std::string elem = b.type == ScalarType::Long ? "uint64_t" : "double";
      out_ += fmt::format("  {{\n    {}* cp_p = ({}*){};\n    for (long cp_i = 0; cp_i < {}; cp_i++)\n", elem, elem, b.name, count);
      if (b.type == ScalarType::Long) {
        out_ += fmt::format("      cp_p[cp_i] = (uint64_t)((cp_i * 7 + {}) % 97 + 1);\n  }}\n", i * 13);
      } else {
        out_ += fmt::format("      cp_p[cp_i] = (double)((cp_i * 7 + {}) % 97 + 1) / 97.0;\n  }}\n", i * 13);
      }
    }
    out_ += "}\n\nstatic void kernel_region(void) {\n";
    for (const auto& n : build_loop_tree(k_)) node(n, 1);
    out_ += "}\n\nstatic uint64_t checksum(void) {\n  uint64_t cp_h = 1469598103934665603ULL;\n";
    for (const auto& b : k_.buffers) {
      out_ += fmt::format(
          "  {{\n    const unsigned char* cp_p = (const unsigned char*){};\n    for (size_t cp_i = 0; cp_i < sizeof({}); cp_i++) {{\n"
          "      cp_h ^= cp_p[cp_i];\n      cp_h *= 1099511628211ULL;\n    }}\n  }}\n",
          b.name, b.name);
    }
    out_ += "  return cp_h;\n}\n\nint main(void) {\n  init_buffers();\n";
    if (opt_.timing) {
      out_ += R"(  struct timespec t0, t1;
  clock_gettime(CLOCK_MONOTONIC, &t0);
  kernel_region();
  clock_gettime(CLOCK_MONOTONIC, &t1);
  double ms = (double)(t1.tv_sec - t0.tv_sec) * 1e3 + (double)(t1.tv_nsec - t0.tv_nsec) / 1e6;
  printf("TIME_MS: %.9f\n", ms);
)";
    } else {
      out_ += "  kernel_region();\n";
    }
    out_ += "  printf(\"CHECKSUM: %016llx\\n\", (unsigned long long)checksum());\n  return 0;\n}\n";
    return std::move(out_);
  }

 private:
  void line(int indent, const std::string& s) {
    out_.append(static_cast<std::size_t>(indent) * 2, ' ');
    out_ += s;
    out_ += "\n";
  }

  std::string access(const Access& a) {
    std::string s = a.buffer;
    for (const auto& sub : a.subscripts) s += "[" + sub.to_string() + "]";
    return s;
  }

  std::string expr(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Value:
        return integer_ ? fmt::format("(uint64_t)(long){}", c_affine(e.value))
                        : fmt::format("(double){}", c_affine(e.value));
      case Expr::Kind::Load:
        return access(e.load);
      case Expr::Kind::Neg:
        return integer_ ? fmt::format("((uint64_t)0 - {})", expr(*e.lhs)) : fmt::format("(-{})", expr(*e.lhs));
      case Expr::Kind::Add:
        return fmt::format("({} + {})", expr(*e.lhs), expr(*e.rhs));
      case Expr::Kind::Sub:
        return fmt::format("({} - {})", expr(*e.lhs), expr(*e.rhs));
      case Expr::Kind::Mul:
        return fmt::format("({} * {})", expr(*e.lhs), expr(*e.rhs));
      case Expr::Kind::Div:
        return integer_ ? fmt::format("cp_sdiv({}, {})", expr(*e.lhs), expr(*e.rhs))
                        : fmt::format("({} / {})", expr(*e.lhs), expr(*e.rhs));
    }
    return "0";
  }

  void statement(std::size_t comp, int indent) {
    const auto& c = k_.computations[comp];
    line(indent, "/* " + c.comp_id + " */");
    std::string s = fmt::format("{} = {};", access(c.body.target), expr(*c.body.value));
    if (c.guards.empty()) {
      line(indent, s);
      return;
    }
    std::vector<std::string> gs;
    for (const auto& g : c.guards) gs.push_back(c_affine(g) + " >= 0");
    line(indent, fmt::format("if ({})", fmt::join(gs, " && ")));
    line(indent + 1, s);
  }

  void children(const LoopTreeNode& n, int indent) {
    for (const auto& c : n.children) node(c, indent);
  }

  void node(const LoopTreeNode& n, int indent) {
    if (!n.loop) {
      statement(n.comp, indent);
      return;
    }
    const Loop& l = *n.loop;
    const std::string& v = l.iterator;
    std::string lb = c_bound(l.lower, true), ub = c_bound(l.upper, false);
    if (l.unroll > 1) {
      int u = l.unroll;
      line(indent, "{");
      line(indent + 1, fmt::format("const long {0}_lb = {1}, {0}_ub = {2};", v, lb, ub));
      line(indent + 1, fmt::format("long {}_u = {}_lb;", v, v));
      line(indent + 1, fmt::format("for (; {0}_u + {1} < {0}_ub; {0}_u += {2}) {{", v, u - 1, u));
      for (int k = 0; k < u; ++k) {
        line(indent + 2, "{");
        line(indent + 3, fmt::format("const long {0} = {0}_u + {1};", v, k));
        children(n, indent + 3);
        line(indent + 2, "}");
      }
      line(indent + 1, "}");
      line(indent + 1, fmt::format("for (; {0}_u < {0}_ub; {0}_u++) {{", v));
      line(indent + 2, fmt::format("const long {0} = {0}_u;", v));
      children(n, indent + 2);
      line(indent + 1, "}");
      line(indent, "}");
      return;
    }
    if (l.parallel) line(indent, "#pragma omp parallel for");
    line(indent, fmt::format("for (long {0} = {1}; {0} < {2}; {0}++) {{", v, lb, ub));
    children(n, indent + 1);
    line(indent, "}");
  }

  const Kernel& k_;
  EmitOptions opt_;
  bool integer_ = true;
  std::string out_;
};

}  // namespace

std::string emit_c(const TransformedKernel& tk, const EmitOptions& options) { return Emitter(tk, options).run(); }

}  // namespace compilot
