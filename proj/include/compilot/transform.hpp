#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "compilot/dependence.hpp"
#include "compilot/kernel.hpp"
#include "compilot/schedule.hpp"

namespace compilot {

struct UnrollDirective {
  std::string comp;
  int level = 0;
  int factor = 0;
  bool operator==(const UnrollDirective&) const = default;
};

struct TransformedKernel {
  Kernel kernel;  // rewritten iteration spaces; loops carry parallel/unroll flags
  std::set<std::pair<std::string, int>> parallel_levels;
  std::vector<UnrollDirective> unroll_directives;
  Schedule provenance;
  bool directives_reordered = false;
};

// Identity transformation of a kernel.
TransformedKernel untransformed(const Kernel& kernel);

// Requires a Legal verdict supplying `solver_results` (empty entries allowed for
// commands without solver parameters). Throws InternalError on structural failure.
TransformedKernel apply_schedule(const Kernel& kernel, const Schedule& schedule,
                                 const std::vector<SolverResult>& solver_results);

struct EmitOptions {
  bool timing = true;  // wrap the kernel region with the TIME_MS harness
};

// C99 + OpenMP translation unit printing `TIME_MS:` and `CHECKSUM:` lines.
std::string emit_c(const TransformedKernel& tk, const EmitOptions& options = {});

}  // namespace compilot
