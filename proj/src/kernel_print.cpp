#include <fmt/format.h>

#include "compilot/kernel.hpp"

namespace compilot {

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub:
      return 1;
    case Expr::Kind::Mul:
    case Expr::Kind::Div:
      return 2;
    case Expr::Kind::Neg:
      return 3;
    default:
      return 4;
  }
}

void print_expr_into(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::Value: {
      bool simple = e.value.is_constant() ? e.value.constant() >= 0
                                          : (e.value.terms().size() == 1 && e.value.constant() == 0 &&
                                             e.value.terms()[0].second == 1);
      if (simple) {
        out += e.value.to_string();
      } else {
        out += "(" + e.value.to_string() + ")";
      }
      return;
    }
    case Expr::Kind::Load:
      out += print_access(e.load);
      return;
    case Expr::Kind::Neg: {
      out += "-";
      bool paren = precedence(*e.lhs) < 3;
      if (paren) out += "(";
      print_expr_into(*e.lhs, out);
      if (paren) out += ")";
      return;
    }
    default: {
      int p = precedence(e);
      bool lp = precedence(*e.lhs) < p;
      bool rp = precedence(*e.rhs) <= p;
      if (lp) out += "(";
      print_expr_into(*e.lhs, out);
      if (lp) out += ")";
      static const char* ops[] = {"", "", "", " + ", " - ", " * ", " / "};
      out += ops[static_cast<int>(e.kind)];
      if (rp) out += "(";
      print_expr_into(*e.rhs, out);
      if (rp) out += ")";
    }
  }
}

std::size_t count_comps(const LoopTreeNode& n) {
  if (!n.loop) return 1;
  std::size_t c = 0;
  for (const auto& ch : n.children) c += count_comps(ch);
  return c;
}

class Printer {
 public:
  explicit Printer(const Kernel& k) : k_(k) {}

  std::string run() {
    std::vector<std::string> ps;
    for (const auto& p : k_.params) ps.push_back(fmt::format("{}={}", p.name, p.value));
    out_ += fmt::format("#pragma kernel {} params({})\n", k_.name, fmt::join(ps, ", "));
    for (const auto& b : k_.buffers) {
      out_ += b.type == ScalarType::Double ? "double " : "long ";
      out_ += b.name;
      for (const auto& e : b.extents) out_ += "[" + e.to_string() + "]";
      out_ += ";\n";
    }
    out_ += "\n";
    auto roots = build_loop_tree(k_);
    nodes(roots, 0, false);
    return std::move(out_);
  }

 private:
  void line(int indent, const std::string& text) {
    out_.append(static_cast<std::size_t>(indent) * 2, ' ');
    out_ += text;
    out_ += "\n";
  }

  void nodes(const std::vector<LoopTreeNode>& ns, int indent, bool commented) {
    for (const auto& n : ns) node(n, indent, commented);
  }

  void node(const LoopTreeNode& n, int indent, bool commented) {
    if (!commented && count_comps(n) == 1) {
      std::size_t c = n.comp;
      const LoopTreeNode* p = &n;
      while (p->loop) p = &p->children.front();
      c = p->comp;
      line(indent, "// comp_ID: " + k_.computations[c].comp_id);
      commented = true;
    }
    if (!n.loop) {
      const auto& comp = k_.computations[n.comp];
      std::string stmt = print_access(comp.body.target) + " = " + print_expr(*comp.body.value) + ";";
      if (!comp.guards.empty()) {
        std::vector<std::string> gs;
        for (const auto& g : comp.guards) gs.push_back(g.to_string() + " >= 0");
        line(indent, fmt::format("if ({})", fmt::join(gs, " && ")));
        line(indent + 1, stmt);
      } else {
        line(indent, stmt);
      }
      return;
    }
    const Loop& l = *n.loop;
    if (l.parallel) line(indent, "#pragma omp parallel for");
    if (l.unroll > 0) line(indent, fmt::format("#pragma unroll({})", l.unroll));
    std::string header = fmt::format("for ({} = {}; {} < {}; {}++)", l.iterator, l.lower.to_string(true), l.iterator,
                                     l.upper.to_string(false), l.iterator);
    if (n.children.size() > 1) {
      line(indent, header + " {");
      nodes(n.children, indent + 1, commented);
      line(indent, "}");
    } else {
      line(indent, header);
      nodes(n.children, indent + 1, commented);
    }
  }

  const Kernel& k_;
  std::string out_;
};

}  // namespace

std::string print_expr(const Expr& e) {
  std::string out;
  print_expr_into(e, out);
  return out;
}

std::string print_access(const Access& a) {
  std::string out = a.buffer;
  for (const auto& s : a.subscripts) out += "[" + s.to_string() + "]";
  return out;
}

std::string print_kernel(const Kernel& kernel) { return Printer(kernel).run(); }

}  // namespace compilot
