#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "compilot/dependence.hpp"
#include "compilot/kernel.hpp"
#include "compilot/schedule.hpp"

namespace compilot::detail {

// Current loop dimension expressed over a computation's original iterators.
struct DimMap;
using DimMapPtr = std::shared_ptr<const DimMap>;

struct DimMap {
  enum class Kind { Affine, Sum, FloorDiv };
  Kind kind = Kind::Affine;
  std::vector<std::int64_t> coeffs;                        // Affine
  std::int64_t constant = 0;                               // Affine, Sum
  std::vector<std::pair<std::int64_t, DimMapPtr>> terms;  // Sum
  DimMapPtr inner;                                         // FloorDiv
  std::int64_t divisor = 1;                                // FloorDiv
};

DimMapPtr identity_map(std::size_t dim, std::size_t depth);
DimMapPtr add_constant(const DimMapPtr& m, std::int64_t k);
// Linear combination; collapses to Affine when every term is Affine.
DimMapPtr combine(const std::vector<std::pair<std::int64_t, DimMapPtr>>& terms, std::int64_t constant);
DimMapPtr floor_div_map(const DimMapPtr& m, std::int64_t divisor);

// Distance (sink minus source) of a current dimension given original distances d.
Interval map_distance(const DimMap& src, const DimMap& sink, const std::vector<Interval>& d);

struct InvalidCommand {
  std::string reason;
};

enum class CommandKind { Fuse, Interchange, Parallelize, Tile, Unroll, Skew, Reverse };

struct ResolvedCommand {
  CommandKind kind = CommandKind::Parallelize;
  std::size_t comp = 0;
  std::vector<int> levels;  // resolved depths; band commands hold consecutive levels
  std::vector<std::int64_t> factors;
  std::vector<std::size_t> group;  // computations carrying the affected loops
  Transformation canonical;

  // Fuse
  std::size_t partner = 0;
  int divergence = 0;
  std::vector<std::size_t> a_side;
  std::vector<std::size_t> b_side;
  std::map<std::size_t, int> fused_upto;  // last fused level per computation
};

class NestState {
 public:
  explicit NestState(const Kernel& original);

  const Kernel& kernel() const { return current_; }
  const Kernel& original() const { return original_; }
  const DimMap& map(std::size_t comp, std::size_t level) const { return *maps_[comp][level]; }
  std::size_t alignment(std::size_t a, std::size_t b) const;
  bool directives_reordered() const { return directives_reordered_; }

  // Throws InvalidCommand.
  ResolvedCommand resolve(const Transformation& t) const;
  void apply(const ResolvedCommand& cmd, const SolverResult& solver);

  // Pair alignment after a Fuse, keyed by ordered computation indices.
  std::size_t fused_alignment(const ResolvedCommand& fuse, std::size_t x, std::size_t y) const;

 private:
  int resolve_level(const LoopLevel& l, std::size_t comp, const char* what) const;
  void check_band(std::size_t comp, int lo, int hi) const;
  bool has_directive_in(const std::vector<std::size_t>& group) const;
  std::string fresh_name(const std::string& base, const std::vector<std::size_t>& group) const;

  void replace_band(const std::vector<std::size_t>& group, int lo, int hi, const std::vector<Loop>& band,
                    const std::map<std::string, AffineExpr, std::less<>>& inner_subst);
  void substitute_below(std::size_t comp, int from_level, const std::map<std::string, AffineExpr, std::less<>>& s);

  void apply_interchange(const ResolvedCommand& cmd);
  void apply_skew(const ResolvedCommand& cmd, std::int64_t sigma);
  void apply_reverse(const ResolvedCommand& cmd);
  void apply_tile(const ResolvedCommand& cmd);
  void apply_fuse(const ResolvedCommand& cmd, const std::vector<std::int64_t>& shifts);

  Kernel original_;
  Kernel current_;
  std::vector<std::vector<DimMapPtr>> maps_;
  std::vector<bool> touched_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> alignment_;
  bool directives_reordered_ = false;
  int next_loop_id_ = 0;
};

}  // namespace compilot::detail
