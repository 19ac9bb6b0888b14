#include <set>

#include "compilot/schedule.hpp"
#include "nest_state.hpp"

namespace compilot {

namespace {

SolverResult placeholder(const detail::ResolvedCommand& cmd) {
  SolverResult sr;
  if (cmd.kind == detail::CommandKind::Skew) sr.skew_factor = 1;
  if (cmd.kind == detail::CommandKind::Fuse) {
    sr.shifts.assign(static_cast<std::size_t>(cmd.levels[0] - cmd.divergence + 1), 0);
  }
  return sr;
}

}  // namespace

std::optional<InvalidReason> prevalidate(const Schedule& schedule, const Kernel& kernel) {
  if (schedule.commands.empty()) return InvalidReason{0, "empty schedule"};
  detail::NestState state(kernel);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < schedule.commands.size(); ++i) {
    detail::ResolvedCommand cmd;
    try {
      cmd = state.resolve(schedule.commands[i]);
    } catch (const detail::InvalidCommand& e) {
      return InvalidReason{i, e.reason};
    }
    std::string key = print_command(cmd.canonical);
    if (!seen.insert(key).second) return InvalidReason{i, "duplicate command " + key};
    state.apply(cmd, placeholder(cmd));
  }
  return std::nullopt;
}

Schedule canonicalize(const Schedule& schedule, const Kernel& kernel) {
  detail::NestState state(kernel);
  Schedule out;
  for (const auto& t : schedule.commands) {
    try {
      auto cmd = state.resolve(t);
      out.commands.push_back(cmd.canonical);
      state.apply(cmd, placeholder(cmd));
    } catch (const detail::InvalidCommand&) {
      out.commands.push_back(t);
    }
  }
  return out;
}

}  // namespace compilot
