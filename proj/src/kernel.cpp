#include <algorithm>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "compilot/error.hpp"
#include "compilot/kernel.hpp"

namespace compilot {

ExprPtr Expr::make_value(AffineExpr v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Value;
  e->value = std::move(v);
  return e;
}

ExprPtr Expr::make_load(Access a) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Load;
  e->load = std::move(a);
  return e;
}

ExprPtr Expr::make_neg(ExprPtr operand) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Neg;
  e->lhs = std::move(operand);
  return e;
}

ExprPtr Expr::make_binary(Kind kind, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Value:
      return a.value == b.value;
    case Expr::Kind::Load:
      return a.load == b.load;
    case Expr::Kind::Neg:
      return expr_equal(*a.lhs, *b.lhs);
    default:
      return expr_equal(*a.lhs, *b.lhs) && expr_equal(*a.rhs, *b.rhs);
  }
}

namespace {

Access substitute_access(const Access& a, const std::map<std::string, AffineExpr, std::less<>>& subst) {
  Access out{a.buffer, {}};
  for (const auto& s : a.subscripts) out.subscripts.push_back(s.substitute(subst));
  return out;
}

}  // namespace

ExprPtr substitute_expr(const ExprPtr& e, const std::map<std::string, AffineExpr, std::less<>>& subst) {
  switch (e->kind) {
    case Expr::Kind::Value:
      return Expr::make_value(e->value.substitute(subst));
    case Expr::Kind::Load:
      return Expr::make_load(substitute_access(e->load, subst));
    case Expr::Kind::Neg:
      return Expr::make_neg(substitute_expr(e->lhs, subst));
    default:
      return Expr::make_binary(e->kind, substitute_expr(e->lhs, subst), substitute_expr(e->rhs, subst));
  }
}

ExprPtr rename_buffers(const ExprPtr& e, const std::map<std::string, std::string>& names) {
  switch (e->kind) {
    case Expr::Kind::Value:
      return e;
    case Expr::Kind::Load: {
      Access a = e->load;
      if (auto it = names.find(a.buffer); it != names.end()) a.buffer = it->second;
      return Expr::make_load(std::move(a));
    }
    case Expr::Kind::Neg:
      return Expr::make_neg(rename_buffers(e->lhs, names));
    default:
      return Expr::make_binary(e->kind, rename_buffers(e->lhs, names), rename_buffers(e->rhs, names));
  }
}

void collect_loads(const Expr& e, std::vector<const Access*>& out) {
  switch (e.kind) {
    case Expr::Kind::Value:
      return;
    case Expr::Kind::Load:
      out.push_back(&e.load);
      return;
    case Expr::Kind::Neg:
      collect_loads(*e.lhs, out);
      return;
    default:
      collect_loads(*e.lhs, out);
      collect_loads(*e.rhs, out);
  }
}

bool operator==(const Assignment& a, const Assignment& b) {
  return a.target == b.target && expr_equal(*a.value, *b.value);
}

bool operator==(const Computation& a, const Computation& b) {
  return a.comp_id == b.comp_id && a.loops == b.loops && a.guards == b.guards && a.body == b.body;
}

bool operator==(const Kernel& a, const Kernel& b) {
  return a.name == b.name && a.params == b.params && a.buffers == b.buffers &&
         a.computations == b.computations;
}

const Computation* Kernel::find(std::string_view comp_id) const {
  for (const auto& c : computations) {
    if (c.comp_id == comp_id) return &c;
  }
  return nullptr;
}

std::optional<std::size_t> Kernel::index_of(std::string_view comp_id) const {
  for (std::size_t i = 0; i < computations.size(); ++i) {
    if (computations[i].comp_id == comp_id) return i;
  }
  return std::nullopt;
}

const BufferDecl* Kernel::buffer(std::string_view name) const {
  for (const auto& b : buffers) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

std::optional<std::int64_t> Kernel::param_value(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p.value;
  }
  return std::nullopt;
}

void renumber_loops(Kernel& kernel) {
  std::map<int, int> ids;
  for (auto& c : kernel.computations) {
    for (auto& l : c.loops) {
      auto [it, inserted] = ids.emplace(l.id, static_cast<int>(ids.size()));
      l.id = it->second;
    }
  }
}

std::size_t shared_depth(const Kernel& kernel, std::size_t a, std::size_t b) {
  const auto& la = kernel.computations[a].loops;
  const auto& lb = kernel.computations[b].loops;
  std::size_t d = 0;
  while (d < la.size() && d < lb.size() && la[d].id == lb[d].id) ++d;
  return d;
}

std::vector<std::size_t> loop_group(const Kernel& kernel, std::size_t comp, std::size_t level) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kernel.computations.size(); ++i) {
    if (i == comp || shared_depth(kernel, comp, i) > level) out.push_back(i);
  }
  return out;
}

Kernel with_params(const Kernel& kernel, const std::map<std::string, std::int64_t>& values) {
  Kernel out = kernel;
  for (auto& p : out.params) {
    if (auto it = values.find(p.name); it != values.end()) p.value = it->second;
  }
  return out;
}

namespace {

void check_symbols(const AffineExpr& e, const Kernel& k, const std::set<std::string>& iters,
                   const std::string& where) {
  for (const auto& [n, c] : e.terms()) {
    if (!k.is_param(n) && !iters.count(n)) {
      throw KernelError(fmt::format("{}: unbound identifier '{}'", where, n));
    }
  }
}

void check_expr(const Expr& e, const Kernel& k, const std::set<std::string>& iters, const std::string& where);

void check_access(const Access& a, const Kernel& k, const std::set<std::string>& iters, const std::string& where) {
  const BufferDecl* d = k.buffer(a.buffer);
  if (!d) throw KernelError(fmt::format("{}: undeclared buffer '{}'", where, a.buffer));
  if (d->extents.size() != a.subscripts.size()) {
    throw KernelError(fmt::format("{}: buffer '{}' has rank {} but is accessed with {} subscripts", where,
                                  a.buffer, d->extents.size(), a.subscripts.size()));
  }
  for (const auto& s : a.subscripts) check_symbols(s, k, iters, where);
}

void check_expr(const Expr& e, const Kernel& k, const std::set<std::string>& iters, const std::string& where) {
  switch (e.kind) {
    case Expr::Kind::Value:
      check_symbols(e.value, k, iters, where);
      return;
    case Expr::Kind::Load:
      check_access(e.load, k, iters, where);
      return;
    case Expr::Kind::Neg:
      check_expr(*e.lhs, k, iters, where);
      return;
    default:
      check_expr(*e.lhs, k, iters, where);
      check_expr(*e.rhs, k, iters, where);
  }
}

}  // namespace

void validate_kernel(const Kernel& kernel) {
  std::set<std::string> names;
  for (const auto& p : kernel.params) {
    if (!names.insert(p.name).second) throw KernelError(fmt::format("duplicate parameter '{}'", p.name));
    if (p.value < 1) throw KernelError(fmt::format("parameter '{}' must be at least 1", p.name));
  }
  for (const auto& b : kernel.buffers) {
    if (!names.insert(b.name).second) throw KernelError(fmt::format("duplicate name '{}'", b.name));
    if (b.extents.empty()) throw KernelError(fmt::format("buffer '{}' must have rank >= 1", b.name));
    for (const auto& e : b.extents) check_symbols(e, kernel, {}, "buffer " + b.name);
  }
  std::set<std::string> ids;
  for (std::size_t ci = 0; ci < kernel.computations.size(); ++ci) {
    const auto& c = kernel.computations[ci];
    if (!ids.insert(c.comp_id).second) throw KernelError(fmt::format("duplicate comp_ID {}", c.comp_id));
    if (c.loops.empty()) throw KernelError(fmt::format("{}: loop depth must be at least 1", c.comp_id));
    std::set<std::string> iters;
    for (const auto& l : c.loops) {
      if (kernel.is_param(l.iterator) || kernel.buffer(l.iterator) || iters.count(l.iterator)) {
        throw KernelError(fmt::format("{}: iterator '{}' shadows another name", c.comp_id, l.iterator));
      }
      for (const auto& t : l.lower.terms) check_symbols(t.numerator, kernel, iters, c.comp_id);
      for (const auto& t : l.upper.terms) check_symbols(t.numerator, kernel, iters, c.comp_id);
      iters.insert(l.iterator);
    }
    for (const auto& g : c.guards) check_symbols(g, kernel, iters, c.comp_id);
    check_access(c.body.target, kernel, iters, c.comp_id);
    check_expr(*c.body.value, kernel, iters, c.comp_id);
    if (ci > 0) {
      // shared loops must form a prefix and be contiguous in program order
      const auto& prev = kernel.computations[ci - 1];
      std::size_t s = shared_depth(kernel, ci - 1, ci);
      for (std::size_t l = s; l < c.loops.size(); ++l) {
        for (std::size_t pj = 0; pj < ci; ++pj) {
          for (const auto& pl : kernel.computations[pj].loops) {
            if (pl.id == c.loops[l].id) {
              throw KernelError(fmt::format("{}: loop structure is not a tree", c.comp_id));
            }
          }
        }
      }
      for (std::size_t l = 0; l < s; ++l) {
        if (!(prev.loops[l] == c.loops[l])) {
          throw KernelError(fmt::format("{}: shared loop headers differ", c.comp_id));
        }
      }
    }
  }
}

std::vector<LoopTreeNode> build_loop_tree(const Kernel& kernel) {
  std::vector<LoopTreeNode> roots;
  for (std::size_t ci = 0; ci < kernel.computations.size(); ++ci) {
    const auto& c = kernel.computations[ci];
    std::size_t s = ci == 0 ? 0 : shared_depth(kernel, ci - 1, ci);
    std::vector<LoopTreeNode>* level = &roots;
    for (std::size_t l = 0; l < s; ++l) level = &level->back().children;
    for (std::size_t l = s; l < c.loops.size(); ++l) {
      LoopTreeNode n;
      n.loop = &c.loops[l];
      level->push_back(std::move(n));
      level = &level->back().children;
    }
    LoopTreeNode leaf;
    leaf.comp = ci;
    level->push_back(std::move(leaf));
  }
  return roots;
}

namespace {

std::string iterator_letter(std::size_t depth, const Kernel& k) {
  std::size_t n = 0;
  for (std::size_t i = 0;; ++i) {
    std::string name(1, static_cast<char>('a' + i % 26));
    if (i >= 26) name += std::to_string(i / 26);
    if (k.is_param(name)) continue;
    if (n++ == depth) return name;
  }
}

}  // namespace

Anonymized anonymize(const Kernel& kernel) {
  Anonymized out;
  std::vector<std::string> order;
  auto note = [&](const std::string& b) {
    if (std::find(order.begin(), order.end(), b) == order.end()) order.push_back(b);
  };
  for (const auto& c : kernel.computations) {
    note(c.body.target.buffer);
    std::vector<const Access*> loads;
    collect_loads(*c.body.value, loads);
    for (const Access* a : loads) note(a->buffer);
  }
  for (const auto& b : kernel.buffers) note(b.name);

  std::map<std::string, std::string> rename;
  std::size_t next = 0;
  for (const auto& b : order) {
    std::string name;
    do {
      name = fmt::format("buf{}", next++);
    } while (kernel.is_param(name));
    rename[b] = name;
    out.buffer_names[name] = b;
  }

  Kernel k;
  k.name = "kernel";
  k.params = kernel.params;
  for (const auto& b : order) {
    BufferDecl d = *kernel.buffer(b);
    d.name = rename[b];
    k.buffers.push_back(std::move(d));
  }
  for (const auto& c : kernel.computations) {
    std::map<std::string, AffineExpr, std::less<>> subst;
    std::map<std::string, std::string> names;
    for (std::size_t d = 0; d < c.loops.size(); ++d) {
      std::string n = iterator_letter(d, kernel);
      subst.emplace(c.loops[d].iterator, AffineExpr::symbol(n));
      names[n] = c.loops[d].iterator;
    }
    Computation nc;
    nc.comp_id = c.comp_id;
    for (const auto& l : c.loops) {
      Loop nl = l;
      nl.iterator = subst.at(l.iterator).terms().front().first;
      nl.lower = l.lower.substitute(subst);
      nl.upper = l.upper.substitute(subst);
      nc.loops.push_back(std::move(nl));
    }
    for (const auto& g : c.guards) nc.guards.push_back(g.substitute(subst));
    nc.body.target.buffer = rename[c.body.target.buffer];
    for (const auto& s : c.body.target.subscripts) nc.body.target.subscripts.push_back(s.substitute(subst));
    nc.body.value = rename_buffers(substitute_expr(c.body.value, subst), rename);
    k.computations.push_back(std::move(nc));
    out.iterator_names.push_back(std::move(names));
  }
  out.kernel = std::move(k);
  return out;
}

std::string render_for_prompt(const Kernel& kernel, double initial_time_ms) {
  if (!(initial_time_ms > 0)) throw std::invalid_argument("initial execution time must be positive");
  return fmt::format(
      "Here is the loop nest to optimize:\n\n```c\n{}```\n\nThe initial execution time of this loop nest is {} ms.\n",
      print_kernel(kernel), initial_time_ms);
}

std::uint64_t kernel_hash(const Kernel& kernel) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : print_kernel(kernel)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace compilot
