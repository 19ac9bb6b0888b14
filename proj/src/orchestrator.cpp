#include "compilot/orchestrator.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "compilot/dependence.hpp"
#include "compilot/error.hpp"
#include "compilot/schedule.hpp"
#include "compilot/transform.hpp"

namespace compilot {

using nlohmann::json;

std::string category_name(FeedbackCategory c) {
  switch (c) {
    case FeedbackCategory::Invalid:
      return "invalid";
    case FeedbackCategory::Illegal:
      return "illegal";
    case FeedbackCategory::SolverFailure:
      return "solver_failure";
    case FeedbackCategory::CompilerCrash:
      return "crash";
    case FeedbackCategory::Success:
      return "success";
  }
  return "invalid";
}

void validate(const OrchestratorConfig& cfg) {
  if (cfg.max_iterations < 1) throw ConfigError("max iterations must be >= 1");
  if (cfg.max_quit_pushes < 0) throw ConfigError("max quit pushes must be >= 0");
  if (cfg.max_exchanges < cfg.max_iterations) throw ConfigError("max exchanges must be >= max iterations");
  validate(cfg.backend);
  validate(cfg.provider);
}

json to_json(const OrchestratorConfig& cfg) {
  const auto& b = cfg.backend;
  const auto& p = cfg.provider;
  json j;
  j["orchestrator"] = {{"max_iterations", cfg.max_iterations},
                       {"max_quit_pushes", cfg.max_quit_pushes},
                       {"max_exchanges", cfg.max_exchanges},
                       {"feedback_enabled", cfg.feedback_enabled},
                       {"analysis_phase_enabled", cfg.analysis_phase_enabled},
                       {"reasoning_required", cfg.reasoning_required},
                       {"hardware_in_prompt", cfg.hardware_in_prompt}};
  j["backend"] = {{"mode", b.mode == BackendMode::Real ? "real" : "simulated"},
                  {"compiler", b.compiler},
                  {"timeout_s", b.timeout_s},
                  {"warmups", b.warmups},
                  {"reps", b.reps},
                  {"threads", b.threads},
                  {"model",
                   {{"unit_cost_ms", b.model.unit_cost_ms},
                    {"threads", b.model.threads},
                    {"tile2d", b.model.tile2d},
                    {"tile3d", b.model.tile3d},
                    {"unroll", b.model.unroll},
                    {"fused", b.model.fused},
                    {"region_overhead_ms", b.model.region_overhead_ms}}}};
  j["provider"] = {{"endpoint", p.endpoint},
                   {"model", p.model},
                   {"temperature", p.temperature ? json(*p.temperature) : json(nullptr)},
                   {"max_output_tokens", p.max_output_tokens ? json(*p.max_output_tokens) : json(nullptr)},
                   {"retries", p.retry.retries},
                   {"backoff_ms", p.retry.backoff.count()},
                   {"api_key_env", p.api_key_env},
                   {"timeout_s", p.timeout_s}};
  return j;
}

OrchestratorConfig config_from_json(const json& j) {
  OrchestratorConfig c;
  if (auto o = j.value("orchestrator", json::object()); o.is_object()) {
    c.max_iterations = o.value("max_iterations", c.max_iterations);
    c.max_quit_pushes = o.value("max_quit_pushes", c.max_quit_pushes);
    c.max_exchanges = o.value("max_exchanges", c.max_exchanges);
    c.feedback_enabled = o.value("feedback_enabled", c.feedback_enabled);
    c.analysis_phase_enabled = o.value("analysis_phase_enabled", c.analysis_phase_enabled);
    c.reasoning_required = o.value("reasoning_required", c.reasoning_required);
    c.hardware_in_prompt = o.value("hardware_in_prompt", c.hardware_in_prompt);
  }
  if (auto b = j.value("backend", json::object()); b.is_object()) {
    auto& bc = c.backend;
    bc.mode = b.value("mode", "simulated") == "real" ? BackendMode::Real : BackendMode::Simulated;
    bc.compiler = b.value("compiler", bc.compiler);
    bc.timeout_s = b.value("timeout_s", bc.timeout_s);
    bc.warmups = b.value("warmups", bc.warmups);
    bc.reps = b.value("reps", bc.reps);
    bc.threads = b.value("threads", bc.threads);
    if (auto m = b.value("model", json::object()); m.is_object()) {
      bc.model.unit_cost_ms = m.value("unit_cost_ms", bc.model.unit_cost_ms);
      bc.model.threads = m.value("threads", bc.model.threads);
      bc.model.tile2d = m.value("tile2d", bc.model.tile2d);
      bc.model.tile3d = m.value("tile3d", bc.model.tile3d);
      bc.model.unroll = m.value("unroll", bc.model.unroll);
      bc.model.fused = m.value("fused", bc.model.fused);
      bc.model.region_overhead_ms = m.value("region_overhead_ms", bc.model.region_overhead_ms);
    }
  }
  if (auto p = j.value("provider", json::object()); p.is_object()) {
    auto& pc = c.provider;
    pc.endpoint = p.value("endpoint", pc.endpoint);
    pc.model = p.value("model", pc.model);
    if (p.contains("temperature") && p["temperature"].is_number()) pc.temperature = p["temperature"].get<double>();
    if (p.contains("max_output_tokens") && p["max_output_tokens"].is_number()) {
      pc.max_output_tokens = p["max_output_tokens"].get<int>();
    }
    pc.retry.retries = p.value("retries", pc.retry.retries);
    pc.retry.backoff = std::chrono::milliseconds(p.value("backoff_ms", pc.retry.backoff.count()));
    pc.api_key_env = p.value("api_key_env", pc.api_key_env);
    pc.timeout_s = p.value("timeout_s", pc.timeout_s);
  }
  return c;
}

std::string config_hash(const OrchestratorConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_json(cfg).dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

double SteadyClock::now_ms() {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
}

namespace {

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

std::string solver_detail(const Schedule& s, const std::vector<SolverResult>& results) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < results.size() && i < s.commands.size(); ++i) {
    if (results[i].skew_factor) parts.push_back(fmt::format("{} sigma={}", print_command(s.commands[i]), *results[i].skew_factor));
    if (!results[i].shifts.empty()) {
      parts.push_back(fmt::format("{} shifts=({})", print_command(s.commands[i]), fmt::join(results[i].shifts, ",")));
    }
  }
  return fmt::format("{}", fmt::join(parts, "; "));
}

}  // namespace

Orchestrator::Orchestrator(const Kernel& kernel, OrchestratorConfig cfg, LLMProvider& provider, Backend& backend,
                           Clock& clock, int run_index)
    : source_(kernel),
      kernel_(anonymize(kernel).kernel),
      cfg_(std::move(cfg)),
      provider_(provider),
      backend_(backend),
      clock_(clock),
      run_index_(run_index) {
  validate(cfg_);
}

ChatReply Orchestrator::exchange(ExchangeRecord& rec) {
  rec.index = state_.exchanges;
  rec.user = state_.history.back().content;
  rec.t_start_ms = clock_.now_ms();
  ChatReply reply = provider_.send(state_.history);
  rec.llm_ms = clock_.now_ms() - rec.t_start_ms;
  llm_ms_ += rec.llm_ms;
  reply.message.role = Role::Assistant;
  ++state_.exchanges;
  state_.tokens += reply.usage;
  rec.usage = reply.usage;
  rec.cumulative = state_.tokens;
  rec.assistant = reply.message.content;
  state_.history.push_back(reply.message);
  return reply;
}

void Orchestrator::respond(const std::string& feedback) {
  state_.history.push_back({Role::User, cfg_.feedback_enabled ? feedback : continuation_prompt()});
}

void Orchestrator::record(ExchangeRecord rec) {
  rec.iteration = state_.iteration;
  rec.best = state_.best_speedup;
  rec.t_end_ms = clock_.now_ms();
  spdlog::debug("exchange {} T={} {} {}", rec.index, rec.iteration, rec.category, rec.schedule);
  records_.push_back(std::move(rec));
}

void Orchestrator::initialize_context() {
  if (initialized_) throw std::logic_error("context already initialized");
  initialized_ = true;
  state_.baseline = backend_.measure_baseline(kernel_);
  PromptOptions po{cfg_.hardware_in_prompt, cfg_.reasoning_required};
  state_.history.push_back({Role::System, system_prompt(po)});
  state_.history.push_back({Role::User, render_for_prompt(kernel_, state_.baseline.median_ms)});
  if (cfg_.analysis_phase_enabled) {
    state_.history.push_back({Role::User, analysis_request()});
    ExchangeRecord rec;
    rec.phase = "analysis";
    exchange(rec);
    rec.payload = "analysis";
    rec.category = "analysis";
    state_.history.push_back({Role::User, begin_instruction(po)});
    record(std::move(rec));
  } else {
    state_.history.push_back({Role::User, begin_instruction(po)});
  }
}

void Orchestrator::propose(ExchangeRecord& rec, const std::string& schedule_text) {
  rec.payload = "schedule";
  std::optional<std::string> invalid;
  Schedule schedule;
  std::string key;
  try {
    schedule = parse_schedule(schedule_text);
  } catch (const ScheduleSyntaxError& e) {
    invalid = e.what();
    key = strip_spaces(schedule_text);
  }
  if (!invalid) {
    if (auto bad = prevalidate(schedule, kernel_)) {
      invalid = bad->reason;
      key = print_schedule(schedule);
    } else {
      schedule = canonicalize(schedule, kernel_);
      key = print_schedule(schedule);
    }
  }
  rec.schedule = key;
  if (state_.explored.count(key)) {
    rec.category = "duplicate";
    respond(duplicate_feedback(key));
    return;
  }
  state_.explored.insert(key);
  ++state_.iteration;
  rec.novel = true;

  auto finish = [&](FeedbackCategory c, const std::string& feedback) {
    rec.category = category_name(c);
    respond(feedback);
    state_.best_series.push_back(state_.best_speedup);
  };

  if (invalid) {
    rec.detail = *invalid;
    finish(FeedbackCategory::Invalid, invalid_feedback(*invalid));
    return;
  }
  auto verdict = check_legal(kernel_, schedule);
  if (auto* il = std::get_if<Illegal>(&verdict)) {
    rec.detail = il->reason;
    finish(FeedbackCategory::Illegal, illegal_feedback(il->reason));
    return;
  }
  if (auto* sf = std::get_if<SolverFailure>(&verdict)) {
    rec.detail = sf->reason;
    finish(FeedbackCategory::SolverFailure, solver_failure_feedback(sf->reason));
    return;
  }
  const auto& legal = std::get<Legal>(verdict);
  double t0 = clock_.now_ms();
  BackendResult result;
  try {
    TransformedKernel tk = apply_schedule(kernel_, schedule, legal.solver_results);
    result = backend_.run_schedule(tk, kernel_, state_.baseline);
  } catch (const InternalError& e) {
    result = CompilerCrash{fmt::format("transformation failed: {}", e.what())};
  }
  rec.backend_ms = clock_.now_ms() - t0;
  backend_ms_ += rec.backend_ms;
  if (auto* ok = std::get_if<BackendSuccess>(&result)) {
    rec.time_ms = ok->time_ms;
    rec.speedup = ok->speedup;
    rec.detail = solver_detail(schedule, legal.solver_results);
    if (ok->speedup > state_.best_speedup) {
      state_.best_speedup = ok->speedup;
      state_.best_schedule = key;
    }
    finish(FeedbackCategory::Success, success_feedback(ok->time_ms, ok->speedup));
    return;
  }
  std::string msg = result_message(result);
  rec.detail = result_kind(result) + ": " + msg;
  finish(FeedbackCategory::CompilerCrash, crash_feedback(msg));
}

StepResult Orchestrator::step() {
  if (!initialized_) initialize_context();
  ExchangeRecord rec;
  rec.phase = "proposal";
  ChatReply reply = exchange(rec);
  LLMResponse r = parse_response(reply.message.content);
  StepResult out = StepResult::Continue;
  switch (r.payload) {
    case LLMResponse::Payload::Unparseable:
      rec.payload = "unparseable";
      rec.category = "unparseable";
      rec.detail = r.reason;
      respond(unparseable_feedback(r.reason));
      break;
    case LLMResponse::Payload::Quit:
      rec.payload = "quit";
      if (state_.quit_count < cfg_.max_quit_pushes) {
        ++state_.quit_count;
        rec.category = "quit_push";
        state_.history.push_back({Role::User, continuation_prompt()});
      } else {
        rec.category = "quit";
        out = StepResult::Terminate;
      }
      break;
    case LLMResponse::Payload::Schedule:
      propose(rec, r.schedule_text);
      break;
  }
  record(std::move(rec));
  return out;
}

RunHeader Orchestrator::header() const {
  RunHeader h;
  h.kernel_id = source_.name;
  h.kernel_hash = fmt::format("{:016x}", kernel_hash(source_));
  h.kernel_text = print_kernel(kernel_);
  h.kernel_source = print_kernel(source_);
  h.provider = provider_.describe();
  h.run_index = run_index_;
  h.config_hash = config_hash(cfg_);
  h.config = to_json(cfg_);
  h.baseline_ms = state_.baseline.median_ms;
  h.started_ms = started_ms_;
  return h;
}

RunRecord Orchestrator::run() {
  started_ms_ = clock_.now_ms();
  RunSummary s;
  try {
    if (!initialized_) initialize_context();
    while (true) {
      if (state_.iteration >= cfg_.max_iterations) {
        s.terminal_reason = "iteration limit";
        break;
      }
      if (state_.exchanges >= cfg_.max_exchanges) {
        s.terminal_reason = "conversation limit";
        break;
      }
      if (step() == StepResult::Terminate) {
        s.terminal_reason = "quit";
        break;
      }
    }
  } catch (const ScriptMismatchError& e) {
    s.complete = false;
    s.terminal_reason = fmt::format("transcript mismatch: {}", e.what());
  } catch (const TransportError& e) {
    s.complete = false;
    s.terminal_reason = fmt::format("transport error: {}", e.what());
  } catch (const BackendError& e) {
    s.complete = false;
    s.terminal_reason = fmt::format("backend error: {}", e.what());
  }
  if (!s.complete) spdlog::warn("dialogue aborted: {}", s.terminal_reason);
  RunRecord rec;
  rec.header = header();
  rec.exchanges = records_;
  s.best_schedule = state_.best_schedule.value_or("");
  s.best_speedup = state_.best_speedup;
  s.iterations = state_.iteration;
  s.exchanges = state_.exchanges;
  s.quit_count = state_.quit_count;
  s.tokens = state_.tokens;
  s.best_series = state_.best_series;
  s.wall_ms = clock_.now_ms() - started_ms_;
  s.llm_ms = llm_ms_;
  s.backend_ms = backend_ms_;
  rec.summary = s;
  return rec;
}

}  // namespace compilot
