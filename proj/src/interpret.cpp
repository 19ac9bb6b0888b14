#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "compilot/error.hpp"
#include "compilot/kernel.hpp"

namespace compilot {

std::vector<std::int64_t> buffer_extents(const Kernel& kernel, const BufferDecl& decl) {
  std::vector<std::int64_t> out;
  for (const auto& e : decl.extents) {
    std::int64_t v = e.evaluate([&](std::string_view n) { return kernel.param_value(n).value_or(0); });
    out.push_back(std::max<std::int64_t>(v, 0));
  }
  return out;
}

std::int64_t buffer_size(const Kernel& kernel, const BufferDecl& decl) {
  std::int64_t n = 1;
  for (auto e : buffer_extents(kernel, decl)) n *= e;
  return n;
}

namespace {

struct CAffine {
  std::vector<std::pair<int, std::int64_t>> terms;
  std::int64_t constant = 0;

  std::int64_t eval(const std::vector<std::int64_t>& slots) const {
    std::int64_t v = constant;
    for (const auto& [s, c] : terms) v += c * slots[s];
    return v;
  }
};

struct CBound {
  std::vector<std::pair<CAffine, std::int64_t>> terms;
};

struct CAccess {
  int buffer;
  std::vector<CAffine> subs;
};

struct CExpr {
  Expr::Kind kind;
  CAffine value;
  CAccess load;
  std::unique_ptr<CExpr> lhs, rhs;
};

struct CNode {
  int slot = -1;  // loop iterator slot; -1 for statements
  CBound lower, upper;
  std::size_t comp = 0;
  std::vector<CNode> children;
};

struct CStmt {
  std::vector<CAffine> guards;
  CAccess target;
  std::unique_ptr<CExpr> value;
  std::vector<int> iter_slots;
};

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

class Machine {
 public:
  Machine(const Kernel& k, bool execute) : k_(k), execute_(execute) {
    for (const auto& p : k.params) slot(p.name);
    for (const auto& p : k.params) slots_[slot(p.name)] = p.value;
    for (std::size_t b = 0; b < k.buffers.size(); ++b) {
      buffer_index_[k.buffers[b].name] = static_cast<int>(b);
      extents_.push_back(buffer_extents(k, k.buffers[b]));
    }
    for (std::size_t c = 0; c < k.computations.size(); ++c) stmts_.push_back(compile_stmt(k.computations[c]));
    roots_ = compile_nodes(build_loop_tree(k));
    instances_.assign(k.computations.size(), 0);
  }

  void run(BufferData& data) {
    if (!execute_) {
      for (const auto& n : roots_) exec(n);
      return;
    }
    for (std::size_t b = 0; b < k_.buffers.size(); ++b) {
      auto& vec = data[k_.buffers[b].name];
      std::int64_t size = buffer_size(k_, k_.buffers[b]);
      if (vec.empty()) vec.assign(static_cast<std::size_t>(size), 0);
      if (static_cast<std::int64_t>(vec.size()) != size) {
        throw InterpretError(fmt::format("buffer {} initialized with {} elements, expected {}", k_.buffers[b].name,
                                         vec.size(), size));
      }
      storage_.push_back(&vec);
    }
    for (const auto& n : roots_) exec(n);
  }

  const std::vector<std::uint64_t>& instances() const { return instances_; }

 private:
  int slot(const std::string& name) {
    auto [it, inserted] = slot_index_.emplace(name, static_cast<int>(slots_.size()));
    if (inserted) slots_.push_back(0);
    return it->second;
  }

  CAffine compile(const AffineExpr& e) {
    CAffine c;
    c.constant = e.constant();
    for (const auto& [n, k] : e.terms()) c.terms.emplace_back(slot(n), k);
    return c;
  }

  CBound compile(const Bound& b) {
    CBound c;
    for (const auto& t : b.terms) c.terms.emplace_back(compile(t.numerator), t.divisor);
    return c;
  }

  CAccess compile(const Access& a) {
    CAccess c;
    c.buffer = buffer_index_.at(a.buffer);
    for (const auto& s : a.subscripts) c.subs.push_back(compile(s));
    return c;
  }

  std::unique_ptr<CExpr> compile(const Expr& e) {
    auto c = std::make_unique<CExpr>();
    c->kind = e.kind;
    if (e.kind == Expr::Kind::Value) c->value = compile(e.value);
    if (e.kind == Expr::Kind::Load) c->load = compile(e.load);
    if (e.lhs) c->lhs = compile(*e.lhs);
    if (e.rhs) c->rhs = compile(*e.rhs);
    return c;
  }

  CStmt compile_stmt(const Computation& comp) {
    CStmt s;
    for (const auto& l : comp.loops) s.iter_slots.push_back(slot(l.iterator));
    for (const auto& g : comp.guards) s.guards.push_back(compile(g));
    s.target = compile(comp.body.target);
    s.value = compile(*comp.body.value);
    return s;
  }

  std::vector<CNode> compile_nodes(const std::vector<LoopTreeNode>& ns) {
    std::vector<CNode> out;
    for (const auto& n : ns) {
      CNode c;
      if (n.loop) {
        c.slot = slot(n.loop->iterator);
        c.lower = compile(n.loop->lower);
        c.upper = compile(n.loop->upper);
        c.children = compile_nodes(n.children);
      } else {
        c.comp = n.comp;
      }
      out.push_back(std::move(c));
    }
    return out;
  }

  std::int64_t lower(const CBound& b) const {
    std::int64_t v = Interval::kNegInf;
    for (const auto& [a, d] : b.terms) v = std::max(v, floor_div(a.eval(slots_), d));
    return v;
  }

  std::int64_t upper(const CBound& b) const {
    std::int64_t v = Interval::kPosInf;
    for (const auto& [a, d] : b.terms) v = std::min(v, floor_div(a.eval(slots_), d));
    return v;
  }

  void exec(const CNode& n) {
    if (n.slot < 0) {
      statement(n.comp);
      return;
    }
    std::int64_t lb = lower(n.lower), ub = upper(n.upper);
    if (!execute_ && n.children.size() >= 1 &&
        std::all_of(n.children.begin(), n.children.end(),
                    [&](const CNode& c) { return c.slot < 0 && stmts_[c.comp].guards.empty(); })) {
      if (ub > lb) {
        for (const auto& c : n.children) instances_[c.comp] += static_cast<std::uint64_t>(ub - lb);
      }
      return;
    }
    for (std::int64_t v = lb; v < ub; ++v) {
      slots_[n.slot] = v;
      for (const auto& c : n.children) exec(c);
    }
  }

  std::string point(std::size_t comp) const {
    const auto& c = k_.computations[comp];
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < c.loops.size(); ++i) {
      parts.push_back(fmt::format("{}={}", c.loops[i].iterator, slots_[stmts_[comp].iter_slots[i]]));
    }
    return fmt::format("({})", fmt::join(parts, ", "));
  }

  std::size_t offset(const CAccess& a, std::size_t comp) const {
    std::int64_t off = 0;
    const auto& ext = extents_[a.buffer];
    for (std::size_t d = 0; d < a.subs.size(); ++d) {
      std::int64_t i = a.subs[d].eval(slots_);
      if (i < 0 || i >= ext[d]) {
        throw InterpretError(fmt::format("{} at {}: index {} of {} dimension {} out of bounds [0, {})",
                                         k_.computations[comp].comp_id, point(comp), i,
                                         k_.buffers[static_cast<std::size_t>(a.buffer)].name, d, ext[d]));
      }
      off = off * ext[d] + i;
    }
    return static_cast<std::size_t>(off);
  }

  std::int64_t eval(const CExpr& e, std::size_t comp) const {
    switch (e.kind) {
      case Expr::Kind::Value:
        return e.value.eval(slots_);
      case Expr::Kind::Load:
        return (*storage_[static_cast<std::size_t>(e.load.buffer)])[offset(e.load, comp)];
      case Expr::Kind::Neg:
        return wrap_sub(0, eval(*e.lhs, comp));
      case Expr::Kind::Add:
        return wrap_add(eval(*e.lhs, comp), eval(*e.rhs, comp));
      case Expr::Kind::Sub:
        return wrap_sub(eval(*e.lhs, comp), eval(*e.rhs, comp));
      case Expr::Kind::Mul:
        return wrap_mul(eval(*e.lhs, comp), eval(*e.rhs, comp));
      case Expr::Kind::Div: {
        std::int64_t a = eval(*e.lhs, comp), b = eval(*e.rhs, comp);
        if (b == 0) {
          throw InterpretError(
              fmt::format("{} at {}: division by zero", k_.computations[comp].comp_id, point(comp)));
        }
        if (b == -1) return wrap_sub(0, a);
        return a / b;
      }
    }
    return 0;
  }

  void statement(std::size_t comp) {
    const CStmt& s = stmts_[comp];
    for (const auto& g : s.guards) {
      if (g.eval(slots_) < 0) return;
    }
    ++instances_[comp];
    if (!execute_) return;
    std::int64_t v = eval(*s.value, comp);
    (*storage_[static_cast<std::size_t>(s.target.buffer)])[offset(s.target, comp)] = v;
  }

  const Kernel& k_;
  bool execute_;
  std::map<std::string, int> slot_index_;
  std::vector<std::int64_t> slots_;
  std::map<std::string, int> buffer_index_;
  std::vector<std::vector<std::int64_t>> extents_;
  std::vector<CStmt> stmts_;
  std::vector<CNode> roots_;
  std::vector<std::vector<std::int64_t>*> storage_;
  std::vector<std::uint64_t> instances_;
};

}  // namespace

InterpretResult interpret_counting(const Kernel& kernel, const BufferData& init) {
  InterpretResult r;
  r.buffers = init;
  for (auto it = r.buffers.begin(); it != r.buffers.end();) {
    if (!kernel.buffer(it->first)) {
      throw InterpretError(fmt::format("initial data for unknown buffer {}", it->first));
    }
    ++it;
  }
  Machine m(kernel, true);
  m.run(r.buffers);
  r.instances = m.instances();
  return r;
}

BufferData interpret(const Kernel& kernel, const BufferData& init) { return interpret_counting(kernel, init).buffers; }

std::vector<std::uint64_t> count_instances(const Kernel& kernel) {
  Machine m(kernel, false);
  BufferData unused;
  m.run(unused);
  return m.instances();
}

std::uint64_t total_iteration_points(const Kernel& kernel) {
  std::uint64_t n = 0;
  for (auto c : count_instances(kernel)) n += c;
  return n;
}

BufferData random_inputs(const Kernel& kernel, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> dist(1, 100);
  BufferData out;
  for (const auto& b : kernel.buffers) {
    auto& v = out[b.name];
    v.resize(static_cast<std::size_t>(buffer_size(kernel, b)));
    for (auto& x : v) x = dist(rng);
  }
  return out;
}

}  // namespace compilot
