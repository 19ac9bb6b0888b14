#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "compilot/affine.hpp"
#include "compilot/kernel.hpp"
#include "compilot/schedule.hpp"

namespace compilot {

enum class DepKind { Flow, Anti, Output };
std::string_view dep_kind_name(DepKind k);

// Distances are sink minus source over the aligned loop levels. Entries are
// intervals; an exact entry has lo == hi, an unknown entry is (-inf, inf).
struct Dependence {
  std::string source;
  std::string sink;
  DepKind kind = DepKind::Flow;
  std::vector<Interval> distance;

  // First entry that is surely positive, if every earlier entry is surely zero.
  std::optional<std::size_t> carried_level() const;
  bool operator==(const Dependence&) const = default;
  bool operator<(const Dependence& other) const;
};

// Analytic dependences over original shared loops.
std::vector<Dependence> compute_dependences(const Kernel& kernel);

// Dependences between computations s and t (s <= t in program order, both
// directions), with distances over `aligned` leading loop levels.
std::vector<Dependence> pair_dependences(const Kernel& kernel, std::size_t s, std::size_t t, std::size_t aligned);

// Direct: each access depends on the last conflicting access only (writes kill).
// Memory: every ordered pair of conflicting accesses.
enum class DepSemantics { Direct, Memory };

// Exhaustive instance enumeration; exact. Intended for small parameter sizes.
std::vector<Dependence> brute_force_dependences(const Kernel& kernel, DepSemantics semantics = DepSemantics::Direct);

// One line per dependence: `src sink kind (d0,d1,...)`.
std::string dump_dependences(const std::vector<Dependence>& deps);

// True when every brute-force dependence is covered by an analytic one with
// the same endpoints and kind whose entries contain it.
bool covers(const std::vector<Dependence>& analytic, const Dependence& exact);

struct SolverResult {
  std::optional<std::int64_t> skew_factor;
  std::vector<std::int64_t> shifts;
  bool operator==(const SolverResult&) const = default;
};

inline constexpr std::int64_t kMaxSkewFactor = 16;
inline constexpr std::int64_t kMaxShift = 16;

struct Legal {
  std::vector<SolverResult> solver_results;  // one per command
};
struct Illegal {
  std::size_t command_index = 0;
  std::string reason;
};
struct SolverFailure {
  std::size_t command_index = 0;
  std::string reason;
};
using LegalityVerdict = std::variant<Legal, Illegal, SolverFailure>;

LegalityVerdict check_legal(const Kernel& kernel, const Schedule& schedule);

struct Counterexample {
  std::string buffer;
  std::size_t index = 0;
  std::int64_t expected = 0;
  std::int64_t actual = 0;
  std::string to_string() const;
};

// Interprets both kernels on identical seeded inputs.
std::optional<Counterexample> compare_semantics(const Kernel& original, const Kernel& transformed,
                                                std::uint64_t seed);

// Test oracle: check_legal must return Legal; the transformed kernel must then
// reproduce the original buffers exactly. Throws std::logic_error if not Legal.
std::optional<Counterexample> assert_semantics_preserved(const Kernel& kernel, const Schedule& schedule,
                                                         std::uint64_t seed);

}  // namespace compilot
