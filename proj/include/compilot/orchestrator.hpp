#pragma once

#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compilot/backend.hpp"
#include "compilot/kernel.hpp"
#include "compilot/llm.hpp"
#include "compilot/prompts.hpp"
#include "compilot/run_record.hpp"

namespace compilot {

enum class FeedbackCategory { Invalid, Illegal, SolverFailure, CompilerCrash, Success };

std::string category_name(FeedbackCategory c);

struct FeedbackMessage {
  FeedbackCategory category = FeedbackCategory::Invalid;
  std::string text;
  std::string reason;
  std::optional<double> speedup;  // set iff Success
};

struct OrchestratorConfig {
  int max_iterations = 30;
  int max_quit_pushes = 5;
  int max_exchanges = 90;
  bool feedback_enabled = true;
  bool analysis_phase_enabled = true;
  bool reasoning_required = true;
  bool hardware_in_prompt = true;
  BackendConfig backend;
  LLMProviderConfig provider;
};

void validate(const OrchestratorConfig& cfg);
nlohmann::json to_json(const OrchestratorConfig& cfg);
OrchestratorConfig config_from_json(const nlohmann::json& j);
// 16 hex digits identifying the configuration.
std::string config_hash(const OrchestratorConfig& cfg);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_ms() = 0;
};

// Advances by one millisecond per reading; makes run records reproducible.
class LogicalClock : public Clock {
 public:
  double now_ms() override { return ticks_++; }

 private:
  double ticks_ = 0;
};

class SteadyClock : public Clock {
 public:
  double now_ms() override;

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct DialogueState {
  std::vector<ChatMessage> history;
  std::set<std::string> explored;
  int iteration = 0;  // T
  int quit_count = 0;
  int exchanges = 0;
  std::optional<std::string> best_schedule;
  double best_speedup = 1.0;
  std::vector<double> best_series{1.0};
  Measurement baseline;
  TokenUsage tokens;
};

enum class StepResult { Continue, Terminate };

class Orchestrator {
 public:
  // The kernel is anonymized before it is shown to the model.
  Orchestrator(const Kernel& kernel, OrchestratorConfig cfg, LLMProvider& provider, Backend& backend, Clock& clock,
               int run_index = 0);

  const Kernel& kernel() const { return kernel_; }
  const DialogueState& state() const { return state_; }
  const std::vector<ExchangeRecord>& exchanges() const { return records_; }

  // Measures the baseline and builds the context; runs the analysis exchange when enabled.
  void initialize_context();
  StepResult step();
  // Runs the full dialogue; transport and backend failures yield an incomplete record.
  RunRecord run();

 private:
  ChatReply exchange(ExchangeRecord& rec);
  void respond(const std::string& feedback);
  void record(ExchangeRecord rec);
  void propose(ExchangeRecord& rec, const std::string& schedule_text);
  RunHeader header() const;

  Kernel source_;
  Kernel kernel_;
  OrchestratorConfig cfg_;
  LLMProvider& provider_;
  Backend& backend_;
  Clock& clock_;
  int run_index_;
  DialogueState state_;
  std::vector<ExchangeRecord> records_;
  bool initialized_ = false;
  double started_ms_ = 0;
  double llm_ms_ = 0;
  double backend_ms_ = 0;
};

}  // namespace compilot
