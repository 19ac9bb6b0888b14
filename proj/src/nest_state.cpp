#include "nest_state.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "compilot/error.hpp"

namespace compilot::detail {

DimMapPtr identity_map(std::size_t dim, std::size_t depth) {
  auto m = std::make_shared<DimMap>();
  m->coeffs.assign(depth, 0);
  m->coeffs[dim] = 1;
  return m;
}

DimMapPtr add_constant(const DimMapPtr& m, std::int64_t k) {
  if (m->kind == DimMap::Kind::FloorDiv) return combine({{1, m}}, k);
  auto out = std::make_shared<DimMap>(*m);
  out->constant += k;
  return out;
}

DimMapPtr combine(const std::vector<std::pair<std::int64_t, DimMapPtr>>& terms, std::int64_t constant) {
  bool affine = std::all_of(terms.begin(), terms.end(),
                            [](const auto& t) { return t.second->kind == DimMap::Kind::Affine; });
  auto out = std::make_shared<DimMap>();
  out->constant = constant;
  if (affine) {
    for (const auto& [c, m] : terms) {
      if (out->coeffs.size() < m->coeffs.size()) out->coeffs.resize(m->coeffs.size(), 0);
      for (std::size_t p = 0; p < m->coeffs.size(); ++p) out->coeffs[p] += c * m->coeffs[p];
      out->constant += c * m->constant;
    }
    return out;
  }
  out->kind = DimMap::Kind::Sum;
  out->terms = terms;
  return out;
}

DimMapPtr floor_div_map(const DimMapPtr& m, std::int64_t divisor) {
  auto out = std::make_shared<DimMap>();
  out->kind = DimMap::Kind::FloorDiv;
  out->inner = m;
  out->divisor = divisor;
  return out;
}

Interval map_distance(const DimMap& src, const DimMap& sink, const std::vector<Interval>& d) {
  if (src.kind != sink.kind) return Interval::star();
  switch (src.kind) {
    case DimMap::Kind::Affine: {
      Interval sum = Interval::exact(0);
      std::size_t n = std::max(src.coeffs.size(), sink.coeffs.size());
      for (std::size_t p = 0; p < n; ++p) {
        std::int64_t cs = p < src.coeffs.size() ? src.coeffs[p] : 0;
        std::int64_t ct = p < sink.coeffs.size() ? sink.coeffs[p] : 0;
        if (p < d.size()) {
          if (cs != ct) return Interval::star();
          if (cs != 0) sum = sum + d[p].scale(cs);
        } else if (cs != 0 || ct != 0) {
          return Interval::star();
        }
      }
      return sum.shift(sink.constant - src.constant);
    }
    case DimMap::Kind::Sum: {
      if (src.terms.size() != sink.terms.size()) return Interval::star();
      Interval sum = Interval::exact(0);
      for (std::size_t i = 0; i < src.terms.size(); ++i) {
        if (src.terms[i].first != sink.terms[i].first) return Interval::star();
        sum = sum + map_distance(*src.terms[i].second, *sink.terms[i].second, d).scale(src.terms[i].first);
      }
      return sum.shift(sink.constant - src.constant);
    }
    case DimMap::Kind::FloorDiv:
      if (src.divisor != sink.divisor) return Interval::star();
      return map_distance(*src.inner, *sink.inner, d).floordiv(src.divisor);
  }
  return Interval::star();
}

NestState::NestState(const Kernel& original) : original_(original), current_(original) {
  renumber_loops(current_);
  for (const auto& c : current_.computations) {
    std::vector<DimMapPtr> ms;
    for (std::size_t l = 0; l < c.depth(); ++l) ms.push_back(identity_map(l, c.depth()));
    maps_.push_back(std::move(ms));
  }
  touched_.assign(current_.computations.size(), false);
}

std::size_t NestState::alignment(std::size_t a, std::size_t b) const {
  if (a == b) return original_.computations[a].depth();
  auto key = std::minmax(a, b);
  auto it = alignment_.find({key.first, key.second});
  if (it != alignment_.end()) return it->second;
  return shared_depth(original_, a, b);
}

std::size_t NestState::fused_alignment(const ResolvedCommand& fuse, std::size_t x, std::size_t y) const {
  return static_cast<std::size_t>(std::min(fuse.fused_upto.at(x), fuse.fused_upto.at(y)) + 1);
}

int NestState::resolve_level(const LoopLevel& l, std::size_t comp, const char* what) const {
  const auto& c = current_.computations[comp];
  int d = l.resolve(c.depth());
  if (d < 0 || d >= static_cast<int>(c.depth())) {
    throw InvalidCommand{fmt::format("{} level {} out of range for {} (loop depth {})", what, l.to_string(),
                                     c.comp_id, c.depth())};
  }
  return d;
}

void NestState::check_band(std::size_t comp, int lo, int hi) const {
  for (int m = lo; m < hi; ++m) {
    if (loop_group(current_, comp, static_cast<std::size_t>(m)) !=
        loop_group(current_, comp, static_cast<std::size_t>(m + 1))) {
      throw InvalidCommand{fmt::format("loops L{}..L{} of {} are not perfectly nested", lo, hi,
                                       current_.computations[comp].comp_id)};
    }
  }
}

bool NestState::has_directive_in(const std::vector<std::size_t>& group) const {
  for (std::size_t c : group) {
    for (const auto& l : current_.computations[c].loops) {
      if (l.parallel || l.unroll > 0) return true;
    }
  }
  return false;
}

std::string NestState::fresh_name(const std::string& base, const std::vector<std::size_t>& group) const {
  auto taken = [&](const std::string& n) {
    if (current_.is_param(n) || current_.buffer(n)) return true;
    for (std::size_t c : group) {
      for (const auto& l : current_.computations[c].loops) {
        if (l.iterator == n) return true;
      }
    }
    return false;
  };
  std::string name = base + "_t";
  while (taken(name)) name += "t";
  return name;
}

namespace {

std::string alias(const Kernel& k, const std::vector<std::size_t>& group) {
  std::string best = k.computations[group.front()].comp_id;
  for (std::size_t c : group) best = std::min(best, k.computations[c].comp_id);
  return best;
}

std::size_t require_comp(const Kernel& k, const std::string& id) {
  auto idx = k.index_of(id);
  if (!idx) throw InvalidCommand{fmt::format("unknown comp_ID {}", id)};
  return *idx;
}

}  // namespace

ResolvedCommand NestState::resolve(const Transformation& t) const {
  ResolvedCommand r;
  const Kernel& k = current_;
  if (const auto* f = std::get_if<Fuse>(&t)) {
    std::size_t ia = require_comp(k, f->comp);
    std::size_t ib = require_comp(k, f->partner);
    if (ia == ib) throw InvalidCommand{"Fuse requires two distinct computations"};
    int lvl = resolve_level(f->level, ia, "Fuse");
    std::size_t a = std::min(ia, ib), b = std::max(ia, ib);
    const auto& ca = k.computations[a];
    const auto& cb = k.computations[b];
    if (lvl >= static_cast<int>(ca.depth()) || lvl >= static_cast<int>(cb.depth())) {
      throw InvalidCommand{fmt::format("Fuse level L{} exceeds the loop depth of {} or {}", lvl, ca.comp_id,
                                       cb.comp_id)};
    }
    int dv = static_cast<int>(shared_depth(k, a, b));
    if (dv > lvl) {
      throw InvalidCommand{fmt::format("{} and {} already share loop L{}", ca.comp_id, cb.comp_id, lvl)};
    }
    r.kind = CommandKind::Fuse;
    r.comp = a;
    r.partner = b;
    r.levels = {lvl};
    r.divergence = dv;
    r.a_side = loop_group(k, a, static_cast<std::size_t>(dv));
    r.b_side = loop_group(k, b, static_cast<std::size_t>(dv));
    if (r.a_side.back() + 1 != r.b_side.front()) {
      throw InvalidCommand{fmt::format("the loops of {} and {} at L{} are not adjacent siblings", ca.comp_id,
                                       cb.comp_id, dv)};
    }
    for (int m = dv; m < lvl; ++m) {
      auto ga = loop_group(k, a, static_cast<std::size_t>(m));
      auto ga1 = loop_group(k, a, static_cast<std::size_t>(m + 1));
      auto gb = loop_group(k, b, static_cast<std::size_t>(m));
      auto gb1 = loop_group(k, b, static_cast<std::size_t>(m + 1));
      if (ga.back() != ga1.back() || gb.front() != gb1.front()) {
        throw InvalidCommand{fmt::format("other statements separate the loops of {} and {} at L{}", ca.comp_id,
                                         cb.comp_id, m + 1)};
      }
    }
    for (std::size_t c : r.a_side) r.group.push_back(c);
    for (std::size_t c : r.b_side) r.group.push_back(c);
    for (std::size_t c : r.group) {
      if (touched_[c]) {
        throw InvalidCommand{fmt::format("Fuse must precede other transformations on {}", k.computations[c].comp_id)};
      }
    }
    std::map<std::string, AffineExpr, std::less<>> rename;
    for (int m = dv; m <= lvl; ++m) {
      const Loop& la = ca.loops[static_cast<std::size_t>(m)];
      const Loop& lb = cb.loops[static_cast<std::size_t>(m)];
      if (!la.lower.is_simple() || !la.upper.is_simple() || !lb.lower.is_simple() || !lb.upper.is_simple()) {
        throw InvalidCommand{fmt::format("loop bounds at L{} are not fusible", m)};
      }
      AffineExpr dl = lb.lower.simple().substitute(rename) - la.lower.simple();
      AffineExpr du = lb.upper.simple().substitute(rename) - la.upper.simple();
      for (const auto* e : {&dl, &du}) {
        for (const auto& [n, c] : e->terms()) {
          if (!k.is_param(n)) {
            throw InvalidCommand{fmt::format("loop bounds of {} and {} at L{} differ by more than a constant",
                                             ca.comp_id, cb.comp_id, m)};
          }
        }
      }
      rename[lb.iterator] = AffineExpr::symbol(la.iterator);
    }
    for (std::size_t c : r.a_side) {
      int s = c == a ? lvl : static_cast<int>(shared_depth(k, c, a)) - 1;
      r.fused_upto[c] = std::min(lvl, s);
    }
    for (std::size_t c : r.b_side) {
      int s = c == b ? lvl : static_cast<int>(shared_depth(k, c, b)) - 1;
      r.fused_upto[c] = std::min(lvl, s);
    }
    std::vector<std::size_t> full_a, full_b;
    for (std::size_t c : r.a_side) {
      if (r.fused_upto[c] == lvl) full_a.push_back(c);
    }
    for (std::size_t c : r.b_side) {
      if (r.fused_upto[c] == lvl) full_b.push_back(c);
    }
    r.canonical = Fuse{alias(k, full_a), alias(k, full_b), LoopLevel::depth(lvl)};
    return r;
  }

  std::size_t x = require_comp(k, target_comp(t));
  r.comp = x;
  if (const auto* c = std::get_if<Interchange>(&t)) {
    int i = resolve_level(c->first, x, "Interchange");
    int j = resolve_level(c->second, x, "Interchange");
    if (i == j) throw InvalidCommand{"Interchange requires two different levels"};
    int lo = std::min(i, j), hi = std::max(i, j);
    check_band(x, lo, hi);
    r.kind = CommandKind::Interchange;
    r.levels = {lo, hi};
    r.group = loop_group(k, x, static_cast<std::size_t>(lo));
    r.canonical = Interchange{alias(k, r.group), LoopLevel::depth(lo), LoopLevel::depth(hi)};
  } else if (const auto* c = std::get_if<Skew>(&t)) {
    int i = resolve_level(c->first, x, "Skew");
    int j = resolve_level(c->second, x, "Skew");
    if (j != i + 1) throw InvalidCommand{"Skew levels must be consecutive"};
    check_band(x, i, j);
    r.kind = CommandKind::Skew;
    r.levels = {i, j};
    r.group = loop_group(k, x, static_cast<std::size_t>(i));
    r.canonical = Skew{alias(k, r.group), LoopLevel::depth(i), LoopLevel::depth(j)};
  } else if (const auto* c = std::get_if<Tile2D>(&t)) {
    int i = resolve_level(c->levels[0], x, "Tile2D");
    int j = resolve_level(c->levels[1], x, "Tile2D");
    if (j != i + 1) throw InvalidCommand{"Tile2D levels must be consecutive"};
    for (auto f : c->factors) {
      if (f > kMaxTileFactor) throw InvalidCommand{fmt::format("tile factor {} exceeds {}", f, kMaxTileFactor)};
    }
    check_band(x, i, j);
    r.kind = CommandKind::Tile;
    r.levels = {i, j};
    r.factors = {c->factors[0], c->factors[1]};
    r.group = loop_group(k, x, static_cast<std::size_t>(i));
    r.canonical = Tile2D{alias(k, r.group), {LoopLevel::depth(i), LoopLevel::depth(j)}, c->factors};
  } else if (const auto* c = std::get_if<Tile3D>(&t)) {
    int i = resolve_level(c->levels[0], x, "Tile3D");
    int j = resolve_level(c->levels[1], x, "Tile3D");
    int l = resolve_level(c->levels[2], x, "Tile3D");
    if (j != i + 1 || l != j + 1) throw InvalidCommand{"Tile3D levels must be consecutive"};
    for (auto f : c->factors) {
      if (f > kMaxTileFactor) throw InvalidCommand{fmt::format("tile factor {} exceeds {}", f, kMaxTileFactor)};
    }
    check_band(x, i, l);
    r.kind = CommandKind::Tile;
    r.levels = {i, j, l};
    r.factors = {c->factors[0], c->factors[1], c->factors[2]};
    r.group = loop_group(k, x, static_cast<std::size_t>(i));
    r.canonical = Tile3D{alias(k, r.group), {LoopLevel::depth(i), LoopLevel::depth(j), LoopLevel::depth(l)},
                         c->factors};
  } else if (const auto* c = std::get_if<Parallelize>(&t)) {
    int lvl = resolve_level(c->level, x, "Parallelize");
    r.kind = CommandKind::Parallelize;
    r.levels = {lvl};
    r.group = loop_group(k, x, static_cast<std::size_t>(lvl));
    for (std::size_t g : r.group) {
      for (const auto& loop : k.computations[g].loops) {
        if (loop.parallel) {
          throw InvalidCommand{fmt::format("{} is already inside a parallelized loop; at most one Parallelize per "
                                           "computation",
                                           k.computations[g].comp_id)};
        }
      }
    }
    if (k.computations[x].loops[static_cast<std::size_t>(lvl)].unroll > 0) {
      throw InvalidCommand{"cannot parallelize an unrolled loop"};
    }
    r.canonical = Parallelize{alias(k, r.group), LoopLevel::depth(lvl)};
  } else if (const auto* c = std::get_if<Unroll>(&t)) {
    int lvl = resolve_level(c->level, x, "Unroll");
    if (c->factor > kMaxUnrollFactor) {
      throw InvalidCommand{fmt::format("unroll factor {} exceeds {}", c->factor, kMaxUnrollFactor)};
    }
    const Loop& loop = k.computations[x].loops[static_cast<std::size_t>(lvl)];
    if (loop.unroll > 0) throw InvalidCommand{"loop is already unrolled"};
    if (loop.parallel) throw InvalidCommand{"cannot unroll a parallelized loop"};
    r.kind = CommandKind::Unroll;
    r.levels = {lvl};
    r.factors = {c->factor};
    r.group = loop_group(k, x, static_cast<std::size_t>(lvl));
    r.canonical = Unroll{alias(k, r.group), LoopLevel::depth(lvl), c->factor};
  } else if (const auto* c = std::get_if<Reverse>(&t)) {
    int lvl = resolve_level(c->level, x, "Reverse");
    r.kind = CommandKind::Reverse;
    r.levels = {lvl};
    r.group = loop_group(k, x, static_cast<std::size_t>(lvl));
    r.canonical = Reverse{alias(k, r.group), LoopLevel::depth(lvl)};
  }
  return r;
}

void NestState::substitute_below(std::size_t comp, int from_level,
                                 const std::map<std::string, AffineExpr, std::less<>>& s) {
  if (s.empty()) return;
  auto& c = current_.computations[comp];
  for (std::size_t l = static_cast<std::size_t>(from_level); l < c.loops.size(); ++l) {
    c.loops[l].lower = c.loops[l].lower.substitute(s);
    c.loops[l].upper = c.loops[l].upper.substitute(s);
  }
  for (auto& g : c.guards) g = g.substitute(s);
  for (auto& sub : c.body.target.subscripts) sub = sub.substitute(s);
  c.body.value = substitute_expr(c.body.value, s);
}

void NestState::replace_band(const std::vector<std::size_t>& group, int lo, int hi, const std::vector<Loop>& band,
                             const std::map<std::string, AffineExpr, std::less<>>& inner_subst) {
  for (std::size_t g : group) {
    auto& loops = current_.computations[g].loops;
    std::vector<Loop> next(loops.begin(), loops.begin() + lo);
    next.insert(next.end(), band.begin(), band.end());
    next.insert(next.end(), loops.begin() + hi + 1, loops.end());
    loops = std::move(next);
    substitute_below(g, lo + static_cast<int>(band.size()), inner_subst);
  }
}

namespace {

std::vector<Constraint> band_constraints(const Computation& c, int lo, int hi) {
  std::vector<Constraint> out;
  for (int l = lo; l <= hi; ++l) {
    const Loop& loop = c.loops[static_cast<std::size_t>(l)];
    auto cs = bound_constraints(loop.iterator, loop.lower, loop.upper);
    out.insert(out.end(), cs.begin(), cs.end());
  }
  return out;
}

}  // namespace

void NestState::apply_interchange(const ResolvedCommand& cmd) {
  int lo = cmd.levels[0], hi = cmd.levels[1];
  const auto& c = current_.computations[cmd.comp];
  std::vector<Loop> old(c.loops.begin() + lo, c.loops.begin() + hi + 1);
  std::vector<std::size_t> order(old.size());
  for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
  std::swap(order.front(), order.back());
  std::vector<std::string> vars;
  for (auto p : order) vars.push_back(old[p].iterator);
  auto headers = derive_bounds(band_constraints(c, lo, hi), vars);
  std::vector<Loop> band;
  for (std::size_t p = 0; p < order.size(); ++p) {
    Loop l = old[order[p]];
    l.lower = headers[p].lower;
    l.upper = headers[p].upper;
    l.id = next_loop_id_++;
    band.push_back(std::move(l));
  }
  replace_band(cmd.group, lo, hi, band, {});
  for (std::size_t g : cmd.group) {
    std::vector<DimMapPtr> old_maps(maps_[g].begin() + lo, maps_[g].begin() + hi + 1);
    for (std::size_t p = 0; p < order.size(); ++p) maps_[g][static_cast<std::size_t>(lo) + p] = old_maps[order[p]];
  }
}

void NestState::apply_skew(const ResolvedCommand& cmd, std::int64_t sigma) {
  int i = cmd.levels[0], j = cmd.levels[1];
  const auto& c = current_.computations[cmd.comp];
  Loop li = c.loops[static_cast<std::size_t>(i)], lj = c.loops[static_cast<std::size_t>(j)];
  std::map<std::string, AffineExpr, std::less<>> subst{
      {lj.iterator, AffineExpr::symbol(lj.iterator) - AffineExpr::symbol(li.iterator, sigma)}};
  std::vector<Constraint> cs;
  for (const auto& k : band_constraints(c, i, j)) cs.push_back(k.substitute(subst));
  auto headers = derive_bounds(cs, {li.iterator, lj.iterator});
  li.lower = headers[0].lower;
  li.upper = headers[0].upper;
  lj.lower = headers[1].lower;
  lj.upper = headers[1].upper;
  li.id = next_loop_id_++;
  lj.id = next_loop_id_++;
  replace_band(cmd.group, i, j, {li, lj}, subst);
  for (std::size_t g : cmd.group) {
    auto mi = maps_[g][static_cast<std::size_t>(i)];
    auto mj = maps_[g][static_cast<std::size_t>(j)];
    maps_[g][static_cast<std::size_t>(j)] = combine({{1, mj}, {sigma, mi}}, 0);
  }
}

void NestState::apply_reverse(const ResolvedCommand& cmd) {
  int k = cmd.levels[0];
  const auto& c = current_.computations[cmd.comp];
  Loop loop = c.loops[static_cast<std::size_t>(k)];
  const std::string v = loop.iterator;
  if (loop.lower.is_simple() && loop.upper.is_simple()) {
    AffineExpr e = loop.lower.simple() + loop.upper.simple() - 1;
    std::map<std::string, AffineExpr, std::less<>> subst{{v, e - AffineExpr::symbol(v)}};
    loop.id = next_loop_id_++;
    replace_band(cmd.group, k, k, {loop}, subst);
    for (std::size_t g : cmd.group) {
      const auto& loops = current_.computations[g].loops;
      std::vector<std::pair<std::int64_t, DimMapPtr>> terms{{-1, maps_[g][static_cast<std::size_t>(k)]}};
      std::int64_t konst = e.constant();
      for (const auto& [n, coef] : e.terms()) {
        if (auto pv = current_.param_value(n)) {
          konst += coef * *pv;
          continue;
        }
        for (std::size_t l = 0; l < static_cast<std::size_t>(k); ++l) {
          if (loops[l].iterator == n) terms.emplace_back(coef, maps_[g][l]);
        }
      }
      maps_[g][static_cast<std::size_t>(k)] = combine(terms, konst);
    }
    return;
  }
  std::map<std::string, AffineExpr, std::less<>> subst{{v, -AffineExpr::symbol(v)}};
  std::vector<Constraint> cs;
  for (const auto& q : band_constraints(c, k, k)) cs.push_back(q.substitute(subst));
  auto headers = derive_bounds(cs, {v});
  loop.lower = headers[0].lower;
  loop.upper = headers[0].upper;
  loop.id = next_loop_id_++;
  replace_band(cmd.group, k, k, {loop}, subst);
  for (std::size_t g : cmd.group) {
    maps_[g][static_cast<std::size_t>(k)] = combine({{-1, maps_[g][static_cast<std::size_t>(k)]}}, 0);
  }
}

void NestState::apply_tile(const ResolvedCommand& cmd) {
  int lo = cmd.levels.front(), hi = cmd.levels.back();
  const auto& c = current_.computations[cmd.comp];
  std::vector<Loop> points(c.loops.begin() + lo, c.loops.begin() + hi + 1);
  auto cs = band_constraints(c, lo, hi);
  std::vector<std::string> tile_vars;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::string t = fresh_name(points[p].iterator, cmd.group);
    for (const auto& prev : tile_vars) {
      while (t == prev) t += "t";
    }
    tile_vars.push_back(t);
    std::int64_t f = cmd.factors[p];
    AffineExpr v = AffineExpr::symbol(points[p].iterator);
    AffineExpr tv = AffineExpr::symbol(t, f);
    cs.push_back(v - tv);
    cs.push_back(tv + (f - 1) - v);
  }
  std::vector<std::string> vars = tile_vars;
  for (const auto& p : points) vars.push_back(p.iterator);
  auto headers = derive_bounds(cs, vars);
  std::vector<Loop> band;
  for (std::size_t p = 0; p < tile_vars.size(); ++p) {
    Loop l;
    l.iterator = tile_vars[p];
    l.lower = headers[p].lower;
    l.upper = headers[p].upper;
    l.id = next_loop_id_++;
    band.push_back(std::move(l));
  }
  for (std::size_t p = 0; p < points.size(); ++p) {
    Loop l = points[p];
    l.lower = headers[tile_vars.size() + p].lower;
    l.upper = headers[tile_vars.size() + p].upper;
    l.id = next_loop_id_++;
    band.push_back(std::move(l));
  }
  replace_band(cmd.group, lo, hi, band, {});
  for (std::size_t g : cmd.group) {
    auto& ms = maps_[g];
    std::vector<DimMapPtr> point_maps(ms.begin() + lo, ms.begin() + hi + 1);
    std::vector<DimMapPtr> tile_maps;
    for (std::size_t p = 0; p < point_maps.size(); ++p) {
      tile_maps.push_back(floor_div_map(point_maps[p], cmd.factors[p]));
    }
    std::vector<DimMapPtr> next(ms.begin(), ms.begin() + lo);
    next.insert(next.end(), tile_maps.begin(), tile_maps.end());
    next.insert(next.end(), point_maps.begin(), point_maps.end());
    next.insert(next.end(), ms.begin() + hi + 1, ms.end());
    ms = std::move(next);
  }
}

void NestState::apply_fuse(const ResolvedCommand& cmd, const std::vector<std::int64_t>& shifts) {
  const int dv = cmd.divergence;
  const int lvl = cmd.levels[0];
  auto param = [&](std::string_view n) { return current_.param_value(n).value_or(0); };
  auto delta = [&](int m) { return shifts.empty() ? 0 : shifts[static_cast<std::size_t>(m - dv)]; };
  const Computation a = current_.computations[cmd.comp];
  const Computation b = current_.computations[cmd.partner];

  // Avoid capture: inner iterators of the B side must not reuse the fused names.
  std::set<std::string> fused_names;
  for (int m = dv; m <= lvl; ++m) fused_names.insert(a.loops[static_cast<std::size_t>(m)].iterator);
  for (std::size_t y : cmd.b_side) {
    int fy = cmd.fused_upto.at(y);
    auto& cy = current_.computations[y];
    for (std::size_t l = static_cast<std::size_t>(fy) + 1; l < cy.loops.size(); ++l) {
      if (!fused_names.count(cy.loops[l].iterator)) continue;
      std::string fresh = cy.loops[l].iterator;
      auto used = [&](const std::string& n) {
        if (fused_names.count(n) || current_.is_param(n) || current_.buffer(n)) return true;
        for (const auto& q : cy.loops) {
          if (q.iterator == n) return true;
        }
        return false;
      };
      while (used(fresh)) fresh += "f";
      std::map<std::string, AffineExpr, std::less<>> s{{cy.loops[l].iterator, AffineExpr::symbol(fresh)}};
      cy.loops[l].iterator = fresh;
      substitute_below(y, static_cast<int>(l) + 1, s);
    }
  }

  struct Merged {
    Loop loop;
    AffineExpr lower_a, upper_a, lower_b, upper_b;
  };
  std::vector<Merged> merged;
  std::map<std::string, AffineExpr, std::less<>> rename;
  for (int m = dv; m <= lvl; ++m) {
    const Loop& la = a.loops[static_cast<std::size_t>(m)];
    const Loop& lb = b.loops[static_cast<std::size_t>(m)];
    Merged mg;
    mg.lower_a = la.lower.simple();
    mg.upper_a = la.upper.simple();
    mg.lower_b = lb.lower.simple().substitute(rename) + delta(m);
    mg.upper_b = lb.upper.simple().substitute(rename) + delta(m);
    mg.loop = la;
    mg.loop.lower = (mg.lower_b - mg.lower_a).evaluate(param) >= 0 ? Bound(mg.lower_a) : Bound(mg.lower_b);
    mg.loop.upper = (mg.upper_b - mg.upper_a).evaluate(param) >= 0 ? Bound(mg.upper_b) : Bound(mg.upper_a);
    merged.push_back(mg);
    rename[lb.iterator] = AffineExpr::symbol(la.iterator) - delta(m);
  }

  auto guard = [&](Computation& c, const Merged& mg, const AffineExpr& lo, const AffineExpr& hi) {
    AffineExpr v = AffineExpr::symbol(mg.loop.iterator);
    if (!(mg.loop.lower.simple() == lo)) c.guards.push_back(v - lo);
    if (!(mg.loop.upper.simple() == hi)) c.guards.push_back(hi - 1 - v);
  };

  for (std::size_t x : cmd.a_side) {
    auto& cx = current_.computations[x];
    for (int m = dv; m <= cmd.fused_upto.at(x); ++m) {
      const Merged& mg = merged[static_cast<std::size_t>(m - dv)];
      guard(cx, mg, mg.lower_a, mg.upper_a);
      cx.loops[static_cast<std::size_t>(m)] = mg.loop;
    }
  }
  for (std::size_t y : cmd.b_side) {
    auto& cy = current_.computations[y];
    int fy = cmd.fused_upto.at(y);
    std::map<std::string, AffineExpr, std::less<>> s;
    for (int m = dv; m <= fy; ++m) {
      s[cy.loops[static_cast<std::size_t>(m)].iterator] = rename.at(cy.loops[static_cast<std::size_t>(m)].iterator);
    }
    substitute_below(y, fy + 1, s);
    for (int m = dv; m <= fy; ++m) {
      const Merged& mg = merged[static_cast<std::size_t>(m - dv)];
      guard(cy, mg, mg.lower_b, mg.upper_b);
      cy.loops[static_cast<std::size_t>(m)] = mg.loop;
      maps_[y][static_cast<std::size_t>(m)] = add_constant(maps_[y][static_cast<std::size_t>(m)], delta(m));
    }
  }
  for (std::size_t x : cmd.a_side) {
    for (std::size_t y : cmd.b_side) alignment_[{x, y}] = fused_alignment(cmd, x, y);
  }
}

void NestState::apply(const ResolvedCommand& cmd, const SolverResult& solver) {
  next_loop_id_ = 0;
  for (const auto& c : current_.computations) {
    for (const auto& l : c.loops) next_loop_id_ = std::max(next_loop_id_, l.id + 1);
  }
  bool restructures = cmd.kind != CommandKind::Parallelize && cmd.kind != CommandKind::Unroll &&
                      cmd.kind != CommandKind::Fuse;
  if (restructures && has_directive_in(cmd.group)) directives_reordered_ = true;
  switch (cmd.kind) {
    case CommandKind::Fuse:
      apply_fuse(cmd, solver.shifts);
      break;
    case CommandKind::Interchange:
      apply_interchange(cmd);
      break;
    case CommandKind::Skew:
      apply_skew(cmd, solver.skew_factor.value_or(1));
      break;
    case CommandKind::Reverse:
      apply_reverse(cmd);
      break;
    case CommandKind::Tile:
      apply_tile(cmd);
      break;
    case CommandKind::Parallelize:
      for (std::size_t g : cmd.group) current_.computations[g].loops[static_cast<std::size_t>(cmd.levels[0])].parallel = true;
      break;
    case CommandKind::Unroll:
      for (std::size_t g : cmd.group) {
        current_.computations[g].loops[static_cast<std::size_t>(cmd.levels[0])].unroll =
            static_cast<int>(cmd.factors[0]);
      }
      break;
  }
  if (cmd.kind != CommandKind::Fuse) {
    for (std::size_t g : cmd.group) touched_[g] = true;
  }
  renumber_loops(current_);
}

}  // namespace compilot::detail
