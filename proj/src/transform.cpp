#include <fmt/format.h>

#include "compilot/error.hpp"
#include "compilot/transform.hpp"
#include "nest_state.hpp"

namespace compilot {

namespace {

void collect_directives(TransformedKernel& tk) {
  for (const auto& c : tk.kernel.computations) {
    for (std::size_t l = 0; l < c.loops.size(); ++l) {
      if (c.loops[l].parallel) tk.parallel_levels.emplace(c.comp_id, static_cast<int>(l));
      if (c.loops[l].unroll > 0) {
        tk.unroll_directives.push_back({c.comp_id, static_cast<int>(l), c.loops[l].unroll});
      }
    }
  }
}

}  // namespace

TransformedKernel untransformed(const Kernel& kernel) {
  TransformedKernel tk;
  tk.kernel = kernel;
  collect_directives(tk);
  return tk;
}

TransformedKernel apply_schedule(const Kernel& kernel, const Schedule& schedule,
                                 const std::vector<SolverResult>& solver_results) {
  detail::NestState state(kernel);
  for (std::size_t i = 0; i < schedule.commands.size(); ++i) {
    detail::ResolvedCommand cmd;
    try {
      cmd = state.resolve(schedule.commands[i]);
    } catch (const detail::InvalidCommand& e) {
      throw InternalError(fmt::format("cannot apply {}: {}", print_command(schedule.commands[i]), e.reason));
    }
    SolverResult sr = i < solver_results.size() ? solver_results[i] : SolverResult{};
    if (cmd.kind == detail::CommandKind::Fuse && sr.shifts.empty()) {
      sr.shifts.assign(static_cast<std::size_t>(cmd.levels[0] - cmd.divergence + 1), 0);
    }
    state.apply(cmd, sr);
  }
  TransformedKernel tk;
  tk.kernel = state.kernel();
  tk.provenance = schedule;
  tk.directives_reordered = state.directives_reordered();
  collect_directives(tk);
  return tk;
}

}  // namespace compilot
