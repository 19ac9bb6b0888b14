#include "compilot/run_record.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "compilot/error.hpp"

namespace compilot {

using nlohmann::json;

namespace {

json usage_json(const TokenUsage& u) { return {{"input", u.input_tokens}, {"output", u.output_tokens}}; }

TokenUsage usage_from(const json& j) {
  return {j.value("input", std::uint64_t{0}), j.value("output", std::uint64_t{0})};
}

json header_json(const RunHeader& h) {
  return {{"type", "header"},
          {"v", kRunRecordVersion},
          {"kernel_id", h.kernel_id},
          {"kernel_hash", h.kernel_hash},
          {"kernel", h.kernel_text},
          {"source", h.kernel_source},
          {"provider", h.provider},
          {"run_index", h.run_index},
          {"config_hash", h.config_hash},
          {"config", h.config},
          {"baseline_ms", h.baseline_ms},
          {"started_ms", h.started_ms}};
}

json summary_json(const RunSummary& s) {
  return {{"type", "summary"},
          {"v", kRunRecordVersion},
          {"terminal_reason", s.terminal_reason},
          {"complete", s.complete},
          {"best_schedule", s.best_schedule},
          {"best_speedup", s.best_speedup},
          {"iterations", s.iterations},
          {"exchanges", s.exchanges},
          {"quit_count", s.quit_count},
          {"tokens", usage_json(s.tokens)},
          {"best_series", s.best_series},
          {"wall_ms", s.wall_ms},
          {"llm_ms", s.llm_ms},
          {"backend_ms", s.backend_ms}};
}

void check_version(const json& j, int line) {
  int v = j.value("v", -1);
  if (v != kRunRecordVersion) {
    throw IoError(fmt::format("run record line {}: unsupported version {} (expected {})", line, v, kRunRecordVersion));
  }
}

}  // namespace

json to_json(const ExchangeRecord& e) {
  json j{{"type", "exchange"},
         {"v", kRunRecordVersion},
         {"index", e.index},
         {"phase", e.phase},
         {"user", e.user},
         {"assistant", e.assistant},
         {"payload", e.payload},
         {"schedule", e.schedule},
         {"category", e.category},
         {"detail", e.detail},
         {"novel", e.novel},
         {"iteration", e.iteration},
         {"best", e.best},
         {"usage", usage_json(e.usage)},
         {"cumulative", usage_json(e.cumulative)},
         {"t_start_ms", e.t_start_ms},
         {"t_end_ms", e.t_end_ms},
         {"llm_ms", e.llm_ms},
         {"backend_ms", e.backend_ms}};
  j["time_ms"] = e.time_ms ? json(*e.time_ms) : json(nullptr);
  j["speedup"] = e.speedup ? json(*e.speedup) : json(nullptr);
  return j;
}

ExchangeRecord exchange_from_json(const json& j) {
  ExchangeRecord e;
  e.index = j.value("index", 0);
  e.phase = j.value("phase", "");
  e.user = j.value("user", "");
  e.assistant = j.value("assistant", "");
  e.payload = j.value("payload", "");
  e.schedule = j.value("schedule", "");
  e.category = j.value("category", "");
  e.detail = j.value("detail", "");
  e.novel = j.value("novel", false);
  e.iteration = j.value("iteration", 0);
  e.best = j.value("best", 1.0);
  if (j.contains("usage")) e.usage = usage_from(j["usage"]);
  if (j.contains("cumulative")) e.cumulative = usage_from(j["cumulative"]);
  e.t_start_ms = j.value("t_start_ms", 0.0);
  e.t_end_ms = j.value("t_end_ms", 0.0);
  e.llm_ms = j.value("llm_ms", 0.0);
  e.backend_ms = j.value("backend_ms", 0.0);
  if (j.contains("time_ms") && j["time_ms"].is_number()) e.time_ms = j["time_ms"].get<double>();
  if (j.contains("speedup") && j["speedup"].is_number()) e.speedup = j["speedup"].get<double>();
  return e;
}

std::string serialize(const RunRecord& record) {
  std::string out = header_json(record.header).dump() + "\n";
  for (const auto& e : record.exchanges) out += to_json(e).dump() + "\n";
  if (record.summary) out += summary_json(*record.summary).dump() + "\n";
  return out;
}

RunRecord parse_run_record(const std::string& text) {
  RunRecord r;
  bool have_header = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(fmt::format("run record line {}: {}", lineno, e.what()));
    }
    check_version(j, lineno);
    std::string type = j.value("type", "");
    if (type == "header") {
      RunHeader& h = r.header;
      h.kernel_id = j.value("kernel_id", "");
      h.kernel_hash = j.value("kernel_hash", "");
      h.kernel_text = j.value("kernel", "");
      h.kernel_source = j.value("source", "");
      h.provider = j.value("provider", "");
      h.run_index = j.value("run_index", 0);
      h.config_hash = j.value("config_hash", "");
      h.config = j.value("config", json::object());
      h.baseline_ms = j.value("baseline_ms", 0.0);
      h.started_ms = j.value("started_ms", 0.0);
      have_header = true;
    } else if (type == "exchange") {
      r.exchanges.push_back(exchange_from_json(j));
    } else if (type == "summary") {
      RunSummary s;
      s.terminal_reason = j.value("terminal_reason", "");
      s.complete = j.value("complete", false);
      s.best_schedule = j.value("best_schedule", "");
      s.best_speedup = j.value("best_speedup", 1.0);
      s.iterations = j.value("iterations", 0);
      s.exchanges = j.value("exchanges", 0);
      s.quit_count = j.value("quit_count", 0);
      if (j.contains("tokens")) s.tokens = usage_from(j["tokens"]);
      s.best_series = j.value("best_series", std::vector<double>{});
      s.wall_ms = j.value("wall_ms", 0.0);
      s.llm_ms = j.value("llm_ms", 0.0);
      s.backend_ms = j.value("backend_ms", 0.0);
      r.summary = std::move(s);
    } else {
      throw IoError(fmt::format("run record line {}: unknown record type '{}'", lineno, type));
    }
  }
  if (!have_header) throw IoError("run record has no header");
  return r;
}

void write_run_record(const RunRecord& record, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot write " + tmp.string());
    f << serialize(record);
    if (!f) throw IoError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunRecord read_run_record(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_record(ss.str());
}

}  // namespace compilot
