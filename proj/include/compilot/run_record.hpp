#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "compilot/llm.hpp"

namespace compilot {

inline constexpr int kRunRecordVersion = 1;

struct RunHeader {
  std::string kernel_id;
  std::string kernel_hash;  // 16 hex digits
  std::string kernel_text;  // anonymized kernel as shown to the model
  std::string kernel_source;  // kernel as given, printed
  std::string provider;
  int run_index = 0;
  std::string config_hash;
  nlohmann::json config;  // snapshot of the orchestrator configuration
  double baseline_ms = 0;
  double started_ms = 0;
};

// One provider exchange and what the orchestrator made of it.
struct ExchangeRecord {
  int index = 0;
  std::string phase;      // "analysis" or "proposal"
  std::string user;       // last user message sent with this request
  std::string assistant;  // raw reply
  std::string payload;    // "analysis", "schedule", "quit" or "unparseable"
  std::string schedule;   // canonical key for schedule payloads
  std::string category;   // invalid, illegal, solver_failure, crash, success, duplicate, quit_push, quit, unparseable, analysis
  std::string detail;     // reason, crash sub-kind and message, or solver parameters
  bool novel = false;
  std::optional<double> time_ms;
  std::optional<double> speedup;
  int iteration = 0;  // T after this exchange
  double best = 1.0;  // best-so-far speedup after this exchange
  TokenUsage usage;
  TokenUsage cumulative;
  double t_start_ms = 0;
  double t_end_ms = 0;
  double llm_ms = 0;
  double backend_ms = 0;
};

struct RunSummary {
  std::string terminal_reason;  // "quit", "iteration limit", "conversation limit", or an abort reason
  bool complete = true;
  std::string best_schedule;  // empty when nothing beat the original
  double best_speedup = 1.0;
  int iterations = 0;
  int exchanges = 0;
  int quit_count = 0;
  TokenUsage tokens;
  std::vector<double> best_series;  // index T, starts at 1.0
  double wall_ms = 0;
  double llm_ms = 0;
  double backend_ms = 0;
};

struct RunRecord {
  RunHeader header;
  std::vector<ExchangeRecord> exchanges;
  std::optional<RunSummary> summary;  // missing when the run was interrupted
};

// Line-delimited JSON: header, one line per exchange, summary.
std::string serialize(const RunRecord& record);
RunRecord parse_run_record(const std::string& text);
void write_run_record(const RunRecord& record, const std::filesystem::path& path);
RunRecord read_run_record(const std::filesystem::path& path);

nlohmann::json to_json(const ExchangeRecord& e);
ExchangeRecord exchange_from_json(const nlohmann::json& j);

}  // namespace compilot
