#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "compilot/dependence.hpp"
#include "compilot/error.hpp"

namespace compilot {

std::string_view dep_kind_name(DepKind k) {
  switch (k) {
    case DepKind::Flow:
      return "flow";
    case DepKind::Anti:
      return "anti";
    default:
      return "output";
  }
}

std::optional<std::size_t> Dependence::carried_level() const {
  for (std::size_t p = 0; p < distance.size(); ++p) {
    if (distance[p].surely_positive()) return p;
    if (!distance[p].surely_zero()) return std::nullopt;
  }
  return std::nullopt;
}

bool Dependence::operator<(const Dependence& o) const {
  auto key = [](const Dependence& d) {
    std::vector<std::pair<std::int64_t, std::int64_t>> v;
    for (const auto& i : d.distance) v.emplace_back(i.lo, i.hi);
    return std::make_tuple(d.source, d.sink, static_cast<int>(d.kind), v);
  };
  return key(*this) < key(o);
}

namespace {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) { normalize(); }  // NOLINT
  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    std::int64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  bool zero() const { return num == 0; }
  Rational operator-(const Rational& o) const { return Rational(num * o.den - o.num * den, den * o.den); }
  Rational operator*(const Rational& o) const { return Rational(num * o.num, den * o.den); }
  Rational operator/(const Rational& o) const { return Rational(num * o.den, den * o.num); }
};

struct AccessInfo {
  const Access* access;
  bool write;
  std::vector<std::vector<std::int64_t>> coeffs;  // [dim][loop level]
  std::vector<std::int64_t> constants;
};

std::vector<AccessInfo> accesses_of(const Kernel& k, const Computation& c) {
  std::vector<const Access*> loads;
  collect_loads(*c.body.value, loads);
  std::vector<AccessInfo> out;
  auto info = [&](const Access* a, bool write) {
    AccessInfo ai{a, write, {}, {}};
    for (const auto& s : a->subscripts) {
      std::vector<std::int64_t> row(c.loops.size(), 0);
      std::int64_t konst = s.constant();
      for (const auto& [n, coef] : s.terms()) {
        if (auto pv = k.param_value(n)) {
          konst += coef * *pv;
          continue;
        }
        for (std::size_t l = 0; l < c.loops.size(); ++l) {
          if (c.loops[l].iterator == n) row[l] = coef;
        }
      }
      ai.coeffs.push_back(std::move(row));
      ai.constants.push_back(konst);
    }
    return ai;
  };
  for (const Access* a : loads) out.push_back(info(a, false));
  out.push_back(info(&c.body.target, true));
  return out;
}

enum class DimClass { Det, Free, Star };

struct Solution {
  bool exists = true;
  std::vector<DimClass> cls;
  std::vector<std::int64_t> value;
};

// Solve A e = rhs where A is shared by both accesses; classify each unknown.
Solution solve_uniform(const std::vector<std::vector<std::int64_t>>& a, const std::vector<std::int64_t>& rhs,
                       std::size_t n) {
  Solution sol;
  sol.cls.assign(n, DimClass::Free);
  sol.value.assign(n, 0);
  std::size_t rows = a.size();
  std::vector<std::vector<Rational>> m(rows, std::vector<Rational>(n + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = 0; p < n; ++p) m[r][p] = Rational(a[r][p]);
    m[r][n] = Rational(rhs[r]);
  }
  std::vector<std::size_t> pivot_col;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < rows; ++col) {
    std::size_t sel = row;
    while (sel < rows && m[sel][col].zero()) ++sel;
    if (sel == rows) continue;
    std::swap(m[sel], m[row]);
    Rational pv = m[row][col];
    for (auto& x : m[row]) x = x / pv;
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == row || m[r][col].zero()) continue;
      Rational f = m[r][col];
      for (std::size_t c = 0; c <= n; ++c) m[r][c] = m[r][c] - f * m[row][c];
    }
    pivot_col.push_back(col);
    ++row;
  }
  for (std::size_t r = row; r < rows; ++r) {
    if (!m[r][n].zero()) {
      sol.exists = false;
      return sol;
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    bool nonzero = false;
    for (std::size_t r = 0; r < rows; ++r) nonzero = nonzero || a[r][p] != 0;
    sol.cls[p] = nonzero ? DimClass::Star : DimClass::Free;
  }
  for (std::size_t r = 0; r < pivot_col.size(); ++r) {
    std::size_t col = pivot_col[r];
    bool alone = true;
    for (std::size_t c = 0; c < n; ++c) {
      if (c != col && !m[r][c].zero()) alone = false;
    }
    if (!alone) continue;
    if (m[r][n].den != 1) {
      sol.exists = false;
      return sol;
    }
    sol.cls[col] = DimClass::Det;
    sol.value[col] = m[r][n].num;
  }
  return sol;
}

DepKind kind_of(bool src_write, bool sink_write) {
  if (src_write && sink_write) return DepKind::Output;
  if (src_write) return DepKind::Flow;
  return DepKind::Anti;
}

// Dependences from access x of computation src to access y of computation sink.
void analyze(const Kernel& k, std::size_t src, const AccessInfo& x, std::size_t sink, const AccessInfo& y,
             std::size_t common, std::size_t aligned, std::set<Dependence>& out) {
  if (!x.write && !y.write) return;
  if (x.access->buffer != y.access->buffer) return;
  const auto& cs = k.computations[src];
  const auto& ct = k.computations[sink];
  bool uniform = true;
  for (std::size_t r = 0; r < x.coeffs.size() && uniform; ++r) {
    for (std::size_t p = 0; p < std::max(cs.depth(), ct.depth()); ++p) {
      std::int64_t cx = p < cs.depth() ? x.coeffs[r][p] : 0;
      std::int64_t cy = p < ct.depth() ? y.coeffs[r][p] : 0;
      if (p < aligned ? cx != cy : (cx != 0 || cy != 0)) {
        uniform = false;
        break;
      }
    }
  }
  Solution sol;
  if (uniform) {
    std::vector<std::vector<std::int64_t>> a;
    std::vector<std::int64_t> rhs;
    for (std::size_t r = 0; r < x.coeffs.size(); ++r) {
      a.emplace_back(x.coeffs[r].begin(), x.coeffs[r].begin() + static_cast<std::ptrdiff_t>(aligned));
      rhs.push_back(x.constants[r] - y.constants[r]);
    }
    sol = solve_uniform(a, rhs, aligned);
    if (!sol.exists) return;
  } else {
    sol.cls.assign(aligned, DimClass::Star);
    sol.value.assign(aligned, 0);
  }
  DepKind kind = kind_of(x.write, y.write);
  auto emit = [&](std::size_t p, Interval at_p) {
    Dependence d{cs.comp_id, ct.comp_id, kind, {}};
    for (std::size_t q = 0; q < aligned; ++q) {
      if (q < p) {
        d.distance.push_back(Interval::exact(0));
      } else if (q == p) {
        d.distance.push_back(at_p);
      } else if (sol.cls[q] == DimClass::Det) {
        d.distance.push_back(Interval::exact(sol.value[q]));
      } else {
        d.distance.push_back(Interval::star());
      }
    }
    out.insert(std::move(d));
  };
  for (std::size_t p = 0; p < common; ++p) {
    switch (sol.cls[p]) {
      case DimClass::Det:
        if (sol.value[p] > 0) {
          emit(p, Interval::exact(sol.value[p]));
          return;
        }
        if (sol.value[p] < 0) return;
        break;
      case DimClass::Free:
        emit(p, Interval::exact(1));
        break;
      case DimClass::Star:
        emit(p, Interval::at_least(1));
        break;
    }
  }
  // every common entry may be zero: ordered by program text
  if (src < sink) {
    Dependence d{cs.comp_id, ct.comp_id, kind, {}};
    for (std::size_t q = 0; q < aligned; ++q) {
      if (q < common) {
        d.distance.push_back(Interval::exact(0));
      } else if (sol.cls[q] == DimClass::Det) {
        d.distance.push_back(Interval::exact(sol.value[q]));
      } else {
        d.distance.push_back(Interval::star());
      }
    }
    out.insert(std::move(d));
  }
}

}  // namespace

std::vector<Dependence> pair_dependences(const Kernel& kernel, std::size_t s, std::size_t t, std::size_t aligned) {
  if (s > t) std::swap(s, t);
  std::set<Dependence> out;
  auto as = accesses_of(kernel, kernel.computations[s]);
  if (s == t) {
    std::size_t depth = kernel.computations[s].depth();
    for (const auto& x : as) {
      for (const auto& y : as) analyze(kernel, s, x, s, y, depth, depth, out);
    }
  } else {
    auto at = accesses_of(kernel, kernel.computations[t]);
    std::size_t common = shared_depth(kernel, s, t);
    for (const auto& x : as) {
      for (const auto& y : at) {
        analyze(kernel, s, x, t, y, common, aligned, out);
        analyze(kernel, t, y, s, x, common, aligned, out);
      }
    }
  }
  return {out.begin(), out.end()};
}

std::vector<Dependence> compute_dependences(const Kernel& kernel) {
  std::vector<Dependence> out;
  std::size_t n = kernel.computations.size();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = s; t < n; ++t) {
      std::size_t aligned = s == t ? kernel.computations[s].depth() : shared_depth(kernel, s, t);
      auto deps = pair_dependences(kernel, s, t, aligned);
      out.insert(out.end(), deps.begin(), deps.end());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

class Enumerator {
 public:
  Enumerator(const Kernel& k, DepSemantics sem) : k_(k), sem_(sem) {
    for (const auto& p : k.params) env_[p.name] = p.value;
    for (const auto& b : k.buffers) extents_.push_back(buffer_extents(k, b));
  }

  std::vector<Dependence> run() {
    auto roots = build_loop_tree(k_);
    for (const auto& n : roots) walk(n);
    return {deps_.begin(), deps_.end()};
  }

 private:
  struct Instance {
    std::size_t comp;
    std::vector<std::int64_t> iters;
  };
  struct Cell {
    std::vector<std::size_t> writes;  // only the last one under Direct
    std::vector<std::size_t> reads;
  };

  std::int64_t lookup(std::string_view n) const {
    auto it = env_.find(std::string(n));
    if (it == env_.end()) throw InternalError(fmt::format("unbound symbol {}", n));
    return it->second;
  }

  void walk(const LoopTreeNode& n) {
    if (!n.loop) {
      instance(n.comp);
      return;
    }
    auto look = [this](std::string_view s) { return lookup(s); };
    std::int64_t lb = n.loop->lower.evaluate_lower(look);
    std::int64_t ub = n.loop->upper.evaluate_upper(look);
    for (std::int64_t v = lb; v < ub; ++v) {
      env_[n.loop->iterator] = v;
      for (const auto& c : n.children) walk(c);
    }
    env_.erase(n.loop->iterator);
  }

  std::pair<std::size_t, std::int64_t> address(const Access& a, std::size_t comp) {
    std::size_t b = 0;
    while (k_.buffers[b].name != a.buffer) ++b;
    std::int64_t off = 0;
    auto look = [this](std::string_view s) { return lookup(s); };
    for (std::size_t d = 0; d < a.subscripts.size(); ++d) {
      std::int64_t i = a.subscripts[d].evaluate(look);
      if (i < 0 || i >= extents_[b][d]) {
        throw InterpretError(fmt::format("{}: index {} out of bounds for {}", k_.computations[comp].comp_id, i,
                                         a.buffer));
      }
      off = off * extents_[b][d] + i;
    }
    return {b, off};
  }

  void record(std::size_t src, std::size_t sink, DepKind kind) {
    if (src == sink) return;
    const Instance& a = instances_[src];
    const Instance& b = instances_[sink];
    std::size_t common = a.comp == b.comp ? k_.computations[a.comp].depth() : shared_depth(k_, a.comp, b.comp);
    Dependence d{k_.computations[a.comp].comp_id, k_.computations[b.comp].comp_id, kind, {}};
    for (std::size_t p = 0; p < common; ++p) d.distance.push_back(Interval::exact(b.iters[p] - a.iters[p]));
    deps_.insert(std::move(d));
  }

  void instance(std::size_t comp) {
    const auto& c = k_.computations[comp];
    Instance inst{comp, {}};
    for (const auto& l : c.loops) inst.iters.push_back(env_.at(l.iterator));
    std::size_t id = instances_.size();
    instances_.push_back(std::move(inst));
    std::vector<const Access*> loads;
    collect_loads(*c.body.value, loads);
    for (const Access* a : loads) {
      Cell& cell = cells_[address(*a, comp)];
      for (std::size_t w : cell.writes) record(w, id, DepKind::Flow);
      cell.reads.push_back(id);
    }
    Cell& cell = cells_[address(c.body.target, comp)];
    for (std::size_t w : cell.writes) record(w, id, DepKind::Output);
    // a read is ordered against the next write by another instance
    std::vector<std::size_t> own;
    for (std::size_t r : cell.reads) {
      if (r == id) {
        own.push_back(r);
      } else {
        record(r, id, DepKind::Anti);
      }
    }
    if (sem_ == DepSemantics::Direct) {
      cell.reads = std::move(own);
      cell.writes.clear();
    }
    cell.writes.push_back(id);
  }

  const Kernel& k_;
  DepSemantics sem_;
  std::map<std::string, std::int64_t> env_;
  std::vector<std::vector<std::int64_t>> extents_;
  std::vector<Instance> instances_;
  std::map<std::pair<std::size_t, std::int64_t>, Cell> cells_;
  std::set<Dependence> deps_;
};

}  // namespace

std::vector<Dependence> brute_force_dependences(const Kernel& kernel, DepSemantics semantics) {
  return Enumerator(kernel, semantics).run();
}

std::string dump_dependences(const std::vector<Dependence>& deps) {
  std::string out;
  for (const auto& d : deps) {
    std::vector<std::string> entries;
    for (const auto& i : d.distance) entries.push_back(i.to_string());
    out += fmt::format("{} {} {} ({})\n", d.source, d.sink, dep_kind_name(d.kind), fmt::join(entries, ","));
  }
  return out;
}

bool covers(const std::vector<Dependence>& analytic, const Dependence& exact) {
  for (const auto& d : analytic) {
    if (d.source != exact.source || d.sink != exact.sink || d.kind != exact.kind) continue;
    if (d.distance.size() != exact.distance.size()) continue;
    bool ok = true;
    for (std::size_t p = 0; p < d.distance.size() && ok; ++p) ok = d.distance[p].contains(exact.distance[p].lo);
    if (ok) return true;
  }
  return false;
}

std::string Counterexample::to_string() const {
  return fmt::format("{}[{}]: expected {}, got {}", buffer, index, expected, actual);
}

std::optional<Counterexample> compare_semantics(const Kernel& original, const Kernel& transformed,
                                                std::uint64_t seed) {
  BufferData init = random_inputs(original, seed);
  BufferData a = interpret(original, init);
  BufferData b = interpret(transformed, init);
  for (const auto& [name, va] : a) {
    const auto& vb = b.at(name);
    for (std::size_t i = 0; i < va.size(); ++i) {
      if (va[i] != vb[i]) return Counterexample{name, i, va[i], vb[i]};
    }
  }
  return std::nullopt;
}

}  // namespace compilot
