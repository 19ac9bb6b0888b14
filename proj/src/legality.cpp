#include <algorithm>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "compilot/dependence.hpp"
#include "compilot/error.hpp"
#include "compilot/transform.hpp"
#include "nest_state.hpp"

namespace compilot {

namespace {

using detail::CommandKind;
using detail::NestState;
using detail::ResolvedCommand;

struct Violation {
  std::string text;
};

class DepCache {
 public:
  explicit DepCache(const Kernel& k) : k_(k) {}

  const std::vector<Dependence>& get(std::size_t s, std::size_t t, std::size_t aligned) {
    if (s > t) std::swap(s, t);
    auto key = std::make_tuple(s, t, aligned);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(key, pair_dependences(k_, s, t, aligned)).first->second;
  }

  std::size_t index(const std::string& comp) const { return *k_.index_of(comp); }

 private:
  const Kernel& k_;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<Dependence>> cache_;
};

std::string describe(const Dependence& d, const std::vector<Interval>& dist) {
  std::vector<std::string> es;
  for (const auto& i : dist) es.push_back(i.to_string());
  return fmt::format("{} dependence {} -> {} with distance ({})", dep_kind_name(d.kind), d.source, d.sink,
                     fmt::join(es, ","));
}

class Checker {
 public:
  Checker(const Kernel& k) : kernel_(k), state_(k), deps_(k) {}

  NestState& state() { return state_; }

  std::vector<Interval> current(std::size_t src, std::size_t sink, const Dependence& d) const {
    const Kernel& cur = state_.kernel();
    std::size_t s = src == sink ? cur.computations[src].depth() : shared_depth(cur, src, sink);
    std::vector<Interval> out;
    for (std::size_t k = 0; k < s; ++k) out.push_back(detail::map_distance(state_.map(src, k), state_.map(sink, k), d.distance));
    return out;
  }

  static bool prefix_may_be_zero(const std::vector<Interval>& dist, std::size_t upto) {
    for (std::size_t k = 0; k < upto && k < dist.size(); ++k) {
      if (!dist[k].contains(0)) return false;
    }
    return true;
  }

  static bool lex_ok(std::size_t src, std::size_t sink, const std::vector<Interval>& dist) {
    for (std::size_t k = 0; k < dist.size(); ++k) {
      if (dist[k].may_be_negative()) return false;
      if (!dist[k].contains(0)) return true;
    }
    return src == sink || src < sink;
  }

  template <class F>
  void for_each_dep(const std::vector<std::size_t>& group, F&& f) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i; j < group.size(); ++j) {
        std::size_t s = group[i], t = group[j];
        for (const auto& d : deps_.get(s, t, state_.alignment(s, t))) {
          f(d, deps_.index(d.source), deps_.index(d.sink));
        }
      }
    }
  }

  std::vector<std::size_t> all() const {
    std::vector<std::size_t> g(state_.kernel().computations.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = i;
    return g;
  }

  std::optional<Violation> global_check() {
    std::optional<Violation> v;
    for_each_dep(all(), [&](const Dependence& d, std::size_t src, std::size_t sink) {
      if (v) return;
      auto dist = current(src, sink, d);
      if (!lex_ok(src, sink, dist)) v = Violation{"violates the " + describe(d, dist)};
    });
    if (v) return v;
    const Kernel& cur = state_.kernel();
    for (std::size_t c = 0; c < cur.computations.size() && !v; ++c) {
      for (std::size_t l = 0; l < cur.computations[c].depth() && !v; ++l) {
        if (!cur.computations[c].loops[l].parallel) continue;
        v = parallel_check(c, l);
      }
    }
    return v;
  }

  std::optional<Violation> parallel_check(std::size_t comp, std::size_t level) {
    std::optional<Violation> v;
    for_each_dep(loop_group(state_.kernel(), comp, level), [&](const Dependence& d, std::size_t src, std::size_t sink) {
      if (v) return;
      auto dist = current(src, sink, d);
      if (prefix_may_be_zero(dist, level) && !dist[level].surely_zero()) {
        v = Violation{fmt::format("loop L{} of {} carries the {}", level, state_.kernel().computations[comp].comp_id,
                                  describe(d, dist))};
      }
    });
    return v;
  }

  std::optional<Violation> band_check(const ResolvedCommand& cmd) {
    std::size_t lo = static_cast<std::size_t>(cmd.levels.front());
    std::size_t hi = static_cast<std::size_t>(cmd.levels.back());
    std::optional<Violation> v;
    for_each_dep(cmd.group, [&](const Dependence& d, std::size_t src, std::size_t sink) {
      if (v) return;
      auto dist = current(src, sink, d);
      if (!prefix_may_be_zero(dist, lo)) return;
      for (std::size_t k = lo; k <= hi; ++k) {
        if (dist[k].may_be_negative()) {
          v = Violation{fmt::format("loops L{}..L{} are not permutable: {}", lo, hi, describe(d, dist))};
          return;
        }
      }
    });
    return v;
  }

  std::optional<std::int64_t> solve_skew(const ResolvedCommand& cmd, std::string& why) {
    std::size_t i = static_cast<std::size_t>(cmd.levels[0]), j = i + 1;
    std::vector<std::pair<Interval, Interval>> band;
    bool unknown = false;
    for_each_dep(cmd.group, [&](const Dependence& d, std::size_t src, std::size_t sink) {
      auto dist = current(src, sink, d);
      if (!prefix_may_be_zero(dist, i)) return;
      if (dist[i].lo == Interval::kNegInf || dist[j].lo == Interval::kNegInf) unknown = true;
      band.emplace_back(dist[i], dist[j]);
    });
    if (unknown) {
      why = fmt::format("a dependence distance in the skewed loops L{},L{} is unknown", i, j);
      return std::nullopt;
    }
    for (std::int64_t sigma = 1; sigma <= kMaxSkewFactor; ++sigma) {
      bool ok = std::all_of(band.begin(), band.end(), [&](const auto& p) {
        return p.first.lo >= 0 && (p.second + p.first.scale(sigma)).lo >= 0;
      });
      if (ok) return sigma;
    }
    why = fmt::format("no skewing factor in [1,{}] makes loops L{},L{} permutable", kMaxSkewFactor, i, j);
    return std::nullopt;
  }

  std::optional<std::vector<std::int64_t>> solve_fuse(const ResolvedCommand& cmd, std::string& why) {
    const int dv = cmd.divergence;
    const int lvl = cmd.levels[0];
    const std::size_t n = static_cast<std::size_t>(lvl - dv + 1);
    struct Item {
      std::size_t src, sink;
      std::vector<Interval> base;  // distances over the fused pair's shared levels with zero shift
      bool sink_shifted;           // sink lies on the shifted side
    };
    std::vector<Item> items;
    for (std::size_t x : cmd.a_side) {
      for (std::size_t y : cmd.b_side) {
        std::size_t aligned = state_.fused_alignment(cmd, x, y);
        for (const auto& d : deps_.get(x, y, aligned)) {
          std::size_t src = deps_.index(d.source), sink = deps_.index(d.sink);
          Item it{src, sink, {}, sink == y};
          for (std::size_t k = 0; k < aligned; ++k) {
            it.base.push_back(detail::map_distance(state_.map(src, k), state_.map(sink, k), d.distance));
          }
          if (!prefix_may_be_zero(it.base, static_cast<std::size_t>(dv))) continue;
          items.push_back(std::move(it));
        }
      }
    }
    std::vector<std::int64_t> shift(n, 0);
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= static_cast<std::size_t>(kMaxShift + 1);
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      for (std::size_t i = n; i-- > 0;) {
        shift[i] = static_cast<std::int64_t>(c % static_cast<std::size_t>(kMaxShift + 1));
        c /= static_cast<std::size_t>(kMaxShift + 1);
      }
      bool ok = true;
      for (const auto& it : items) {
        std::vector<Interval> dist = it.base;
        for (std::size_t k = static_cast<std::size_t>(dv); k < dist.size(); ++k) {
          std::int64_t s = shift[k - static_cast<std::size_t>(dv)];
          dist[k] = dist[k].shift(it.sink_shifted ? s : -s);
        }
        if (!lex_ok(it.src, it.sink, dist)) {
          ok = false;
          break;
        }
      }
      if (ok) return shift;
    }
    why = fmt::format("no shift in [0,{}] per level makes fusing {} and {} at L{} legal", kMaxShift,
                      state_.kernel().computations[cmd.comp].comp_id,
                      state_.kernel().computations[cmd.partner].comp_id, lvl);
    return std::nullopt;
  }

 private:
  const Kernel& kernel_;
  NestState state_;
  DepCache deps_;
};

}  // namespace

LegalityVerdict check_legal(const Kernel& kernel, const Schedule& schedule) {
  Checker checker(kernel);
  Legal legal;
  for (std::size_t i = 0; i < schedule.commands.size(); ++i) {
    const auto& t = schedule.commands[i];
    ResolvedCommand cmd;
    try {
      cmd = checker.state().resolve(t);
    } catch (const detail::InvalidCommand& e) {
      return Illegal{i, fmt::format("{} is invalid: {}", print_command(t), e.reason)};
    }
    SolverResult sr;
    if (cmd.kind == CommandKind::Skew) {
      std::string why;
      auto sigma = checker.solve_skew(cmd, why);
      if (!sigma) return SolverFailure{i, fmt::format("{}: {}", print_command(t), why)};
      sr.skew_factor = *sigma;
    } else if (cmd.kind == CommandKind::Fuse) {
      std::string why;
      auto shifts = checker.solve_fuse(cmd, why);
      if (!shifts) return SolverFailure{i, fmt::format("{}: {}", print_command(t), why)};
      sr.shifts = *shifts;
    } else if (cmd.kind == CommandKind::Tile) {
      if (auto v = checker.band_check(cmd)) return Illegal{i, fmt::format("{} {}", print_command(t), v->text)};
    } else if (cmd.kind == CommandKind::Parallelize) {
      if (auto v = checker.parallel_check(cmd.comp, static_cast<std::size_t>(cmd.levels[0]))) {
        return Illegal{i, fmt::format("{}: {}", print_command(t), v->text)};
      }
    }
    checker.state().apply(cmd, sr);
    if (auto v = checker.global_check()) return Illegal{i, fmt::format("{} {}", print_command(t), v->text)};
    legal.solver_results.push_back(sr);
  }
  return legal;
}

std::optional<Counterexample> assert_semantics_preserved(const Kernel& kernel, const Schedule& schedule,
                                                         std::uint64_t seed) {
  auto verdict = check_legal(kernel, schedule);
  const auto* legal = std::get_if<Legal>(&verdict);
  if (!legal) throw std::logic_error("assert_semantics_preserved requires a Legal schedule");
  auto tk = apply_schedule(kernel, schedule, legal->solver_results);
  return compare_semantics(kernel, tk.kernel, seed);
}

}  // namespace compilot
