#include "compilot/compilot.h"

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "compilot/campaign.hpp"
#include "compilot/dependence.hpp"
#include "compilot/error.hpp"
#include "compilot/report.hpp"
#include "compilot/schedule.hpp"
#include "compilot/transform.hpp"

struct cp_kernel {
  compilot::Kernel kernel;
};

struct cp_config {
  compilot::OrchestratorConfig orch;
  std::string provider = "http";
  compilot::ClockKind clock = compilot::ClockKind::Auto;
  int run_index = 0;
  compilot::ReportOptions report;
  std::int64_t oracle_max_param = 8;
  std::uint64_t oracle_seed = 7;
};

namespace {

using namespace compilot;

thread_local std::string t_error;

int fail(int code, const std::string& msg) {
  t_error = msg;
  return code;
}

template <class F>
int guarded(F&& f) {
  t_error.clear();
  try {
    return f();
  } catch (const KernelParseError& e) {
    return fail(CP_ERR_KERNEL_PARSE, e.what());
  } catch (const KernelError& e) {
    return fail(CP_ERR_KERNEL_PARSE, e.what());
  } catch (const IoError& e) {
    return fail(CP_ERR_IO, e.what());
  } catch (const ConfigError& e) {
    return fail(CP_ERR_USAGE, e.what());
  } catch (const TransportError& e) {
    return fail(CP_ERR_PROVIDER, e.what());
  } catch (const BackendError& e) {
    return fail(CP_ERR_BACKEND, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(CP_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CP_ERR_USAGE, e.what());
  } catch (const std::exception& e) {
    return fail(CP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CP_ERR_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

bool parse_bool(const std::string& key, const std::string& v) {
  std::string s;
  for (char c : v) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, v));
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, v));
  return x;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  return x;
}

// "1,5,10" or ranges "0-30"
std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto dash = item.find('-', 1);
    if (dash != std::string::npos) {
      long long a = parse_int(key, item.substr(0, dash)), b = parse_int(key, item.substr(dash + 1));
      if (b < a || b - a > 100000) throw ConfigError(fmt::format("{}: bad range '{}'", key, item));
      for (long long i = a; i <= b; ++i) out.push_back(static_cast<int>(i));
    } else {
      out.push_back(static_cast<int>(parse_int(key, item)));
    }
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) { return fmt::format("{}", fmt::join(v, ",")); }

struct Key {
  std::function<void(cp_config&, const std::string&)> set;
  std::function<std::string(const cp_config&)> get;
};

#define CP_INT(field)                                                                              \
  Key {                                                                                            \
    [](cp_config& c, const std::string& v) { c.field = static_cast<int>(parse_int(#field, v)); }, \
        [](const cp_config& c) { return std::to_string(c.field); }                                \
  }
#define CP_BOOL(field)                                                                 \
  Key {                                                                                \
    [](cp_config& c, const std::string& v) { c.field = parse_bool(#field, v); },     \
        [](const cp_config& c) { return std::string(c.field ? "true" : "false"); }    \
  }
#define CP_DOUBLE(field)                                                               \
  Key {                                                                                \
    [](cp_config& c, const std::string& v) { c.field = parse_double(#field, v); },   \
        [](const cp_config& c) { return fmt::format("{}", c.field); }                 \
  }
#define CP_STRING(field)                                                               \
  Key {                                                                                \
    [](cp_config& c, const std::string& v) { c.field = v; },                         \
        [](const cp_config& c) { return std::string(c.field); }                       \
  }

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table{
      {"orchestrator.max_iterations", CP_INT(orch.max_iterations)},
      {"orchestrator.max_quit_pushes", CP_INT(orch.max_quit_pushes)},
      {"orchestrator.max_exchanges", CP_INT(orch.max_exchanges)},
      {"orchestrator.feedback_enabled", CP_BOOL(orch.feedback_enabled)},
      {"orchestrator.analysis_phase_enabled", CP_BOOL(orch.analysis_phase_enabled)},
      {"orchestrator.reasoning_required", CP_BOOL(orch.reasoning_required)},
      {"orchestrator.hardware_in_prompt", CP_BOOL(orch.hardware_in_prompt)},
      {"backend.mode",
       {[](cp_config& c, const std::string& v) {
          if (v == "real") {
            c.orch.backend.mode = BackendMode::Real;
          } else if (v == "simulated") {
            c.orch.backend.mode = BackendMode::Simulated;
          } else {
            throw ConfigError("backend.mode: expected real or simulated, got '" + v + "'");
          }
        },
        [](const cp_config& c) {
          return std::string(c.orch.backend.mode == BackendMode::Real ? "real" : "simulated");
        }}},
      {"backend.compiler", CP_STRING(orch.backend.compiler)},
      {"backend.timeout_s", CP_INT(orch.backend.timeout_s)},
      {"backend.warmups", CP_INT(orch.backend.warmups)},
      {"backend.reps", CP_INT(orch.backend.reps)},
      {"backend.threads", CP_INT(orch.backend.threads)},
      {"backend.work_dir",
       {[](cp_config& c, const std::string& v) { c.orch.backend.work_dir = v; },
        [](const cp_config& c) { return c.orch.backend.work_dir.string(); }}},
      {"backend.model.unit_cost_ms", CP_DOUBLE(orch.backend.model.unit_cost_ms)},
      {"backend.model.threads", CP_INT(orch.backend.model.threads)},
      {"backend.model.tile2d", CP_DOUBLE(orch.backend.model.tile2d)},
      {"backend.model.tile3d", CP_DOUBLE(orch.backend.model.tile3d)},
      {"backend.model.unroll", CP_DOUBLE(orch.backend.model.unroll)},
      {"backend.model.fused", CP_DOUBLE(orch.backend.model.fused)},
      {"backend.model.region_overhead_ms", CP_DOUBLE(orch.backend.model.region_overhead_ms)},
      {"provider.spec", CP_STRING(provider)},
      {"provider.endpoint", CP_STRING(orch.provider.endpoint)},
      {"provider.model", CP_STRING(orch.provider.model)},
      {"provider.temperature",
       {[](cp_config& c, const std::string& v) {
          if (v.empty() || v == "default") {
            c.orch.provider.temperature.reset();
          } else {
            c.orch.provider.temperature = parse_double("provider.temperature", v);
          }
        },
        [](const cp_config& c) {
          return c.orch.provider.temperature ? fmt::format("{}", *c.orch.provider.temperature) : std::string("default");
        }}},
      {"provider.max_output_tokens",
       {[](cp_config& c, const std::string& v) {
          if (v.empty() || v == "default") {
            c.orch.provider.max_output_tokens.reset();
          } else {
            c.orch.provider.max_output_tokens = static_cast<int>(parse_int("provider.max_output_tokens", v));
          }
        },
        [](const cp_config& c) {
          return c.orch.provider.max_output_tokens ? std::to_string(*c.orch.provider.max_output_tokens)
                                                   : std::string("default");
        }}},
      {"provider.retries", CP_INT(orch.provider.retry.retries)},
      {"provider.backoff_ms",
       {[](cp_config& c, const std::string& v) {
          c.orch.provider.retry.backoff = std::chrono::milliseconds(parse_int("provider.backoff_ms", v));
        },
        [](const cp_config& c) { return std::to_string(c.orch.provider.retry.backoff.count()); }}},
      {"provider.api_key_env", CP_STRING(orch.provider.api_key_env)},
      {"provider.timeout_s", CP_INT(orch.provider.timeout_s)},
      {"run.clock",
       {[](cp_config& c, const std::string& v) {
          if (v == "auto") {
            c.clock = ClockKind::Auto;
          } else if (v == "logical") {
            c.clock = ClockKind::Logical;
          } else if (v == "steady") {
            c.clock = ClockKind::Steady;
          } else {
            throw ConfigError("run.clock: expected auto, logical or steady, got '" + v + "'");
          }
        },
        [](const cp_config& c) {
          return std::string(c.clock == ClockKind::Auto ? "auto" : c.clock == ClockKind::Logical ? "logical" : "steady");
        }}},
      {"run.index", CP_INT(run_index)},
      {"report.at",
       {[](cp_config& c, const std::string& v) { c.report.at = parse_int_list("report.at", v); },
        [](const cp_config& c) { return join_ints(c.report.at); }}},
      {"report.bestof",
       {[](cp_config& c, const std::string& v) { c.report.best_of = parse_int_list("report.bestof", v); },
        [](const cp_config& c) { return join_ints(c.report.best_of); }}},
      {"report.bootstrap", CP_INT(report.bootstrap_iterations)},
      {"report.seed",
       {[](cp_config& c, const std::string& v) {
          c.report.seed = static_cast<std::uint64_t>(parse_int("report.seed", v));
        },
        [](const cp_config& c) { return std::to_string(c.report.seed); }}},
      {"report.include_incomplete", CP_BOOL(report.include_incomplete)},
      {"report.median",
       {[](cp_config& c, const std::string& v) {
          if (v == "midpoint") {
            c.report.convention = MedianConvention::Midpoint;
          } else if (v == "lower") {
            c.report.convention = MedianConvention::Lower;
          } else {
            throw ConfigError("report.median: expected midpoint or lower, got '" + v + "'");
          }
        },
        [](const cp_config& c) {
          return std::string(c.report.convention == MedianConvention::Midpoint ? "midpoint" : "lower");
        }}},
      {"check.oracle_max_param",
       {[](cp_config& c, const std::string& v) { c.oracle_max_param = parse_int("check.oracle_max_param", v); },
        [](const cp_config& c) { return std::to_string(c.oracle_max_param); }}},
      {"check.seed",
       {[](cp_config& c, const std::string& v) {
          c.oracle_seed = static_cast<std::uint64_t>(parse_int("check.seed", v));
        },
        [](const cp_config& c) { return std::to_string(c.oracle_seed); }}},
  };
  return table;
}

std::string summarize(const RunRecord& rec) {
  const RunSummary& s = *rec.summary;
  return fmt::format(
      "kernel: {}\nbaseline_ms: {}\nbest_schedule: {}\nbest_speedup: {:.4f}\niterations: {}\nexchanges: {}\n"
      "quit_count: {}\ntokens: {} (input {}, output {})\nterminal_reason: {}\ncomplete: {}\n",
      rec.header.kernel_id, rec.header.baseline_ms, s.best_schedule.empty() ? "(none)" : s.best_schedule,
      s.best_speedup, s.iterations, s.exchanges, s.quit_count, s.tokens.total(), s.tokens.input_tokens,
      s.tokens.output_tokens, s.terminal_reason, s.complete ? "yes" : "no");
}

int abort_status(const RunSummary& s) {
  if (s.complete) return CP_OK;
  if (s.terminal_reason.rfind("transport error", 0) == 0) return fail(CP_ERR_PROVIDER, s.terminal_reason);
  if (s.terminal_reason.rfind("backend error", 0) == 0) return fail(CP_ERR_BACKEND, s.terminal_reason);
  return fail(CP_ERR_ABORTED, s.terminal_reason);
}

RunRecord run_one(const Kernel& kernel, const OrchestratorConfig& orch, const std::string& provider_spec,
                  ClockKind clock_kind, int run_index, const std::string& stem) {
  validate(orch);
  auto provider = make_provider(provider_spec, orch.provider, stem, run_index);
  auto clock = make_clock(clock_kind, provider_spec, orch.backend);
  Backend backend(orch.backend);
  Orchestrator o(kernel, orch, *provider, backend, *clock, run_index);
  return o.run();
}

}  // namespace

extern "C" {

const char* cp_version(void) { return "1.0.0"; }

const char* cp_last_error(void) { return t_error.c_str(); }

void cp_string_free(char* s) { std::free(s); }

int cp_set_log_level(const char* level) {
  return guarded([&]() -> int {
    if (!level) return fail(CP_ERR_USAGE, "null argument");
    auto l = spdlog::level::from_str(level);
    if (l == spdlog::level::off && std::string(level) != "off") {
      return fail(CP_ERR_USAGE, fmt::format("unknown log level '{}'", level));
    }
    spdlog::set_level(l);
    return CP_OK;
  });
}

int cp_kernel_parse(const char* source, cp_kernel** out) {
  return guarded([&]() -> int {
    if (!source || !out) return fail(CP_ERR_USAGE, "null argument");
    *out = new cp_kernel{parse_kernel(source)};
    return CP_OK;
  });
}

int cp_kernel_load(const char* path, cp_kernel** out) {
  return guarded([&]() -> int {
    if (!path || !out) return fail(CP_ERR_USAGE, "null argument");
    *out = new cp_kernel{load_kernel(path)};
    return CP_OK;
  });
}

void cp_kernel_free(cp_kernel* kernel) { delete kernel; }

int cp_kernel_print(const cp_kernel* kernel, char** out) {
  return guarded([&]() -> int {
    if (!kernel || !out) return fail(CP_ERR_USAGE, "null argument");
    put(out, print_kernel(kernel->kernel));
    return CP_OK;
  });
}

int cp_config_new(cp_config** out) {
  return guarded([&]() -> int {
    if (!out) return fail(CP_ERR_USAGE, "null argument");
    *out = new cp_config{};
    return CP_OK;
  });
}

void cp_config_free(cp_config* config) { delete config; }

int cp_config_set(cp_config* config, const char* key, const char* value) {
  return guarded([&]() -> int {
    if (!config || !key || !value) return fail(CP_ERR_USAGE, "null argument");
    auto it = keys().find(key);
    if (it == keys().end()) return fail(CP_ERR_USAGE, fmt::format("unknown configuration key '{}'", key));
    it->second.set(*config, value);
    return CP_OK;
  });
}

int cp_config_get(const cp_config* config, const char* key, char** out) {
  return guarded([&]() -> int {
    if (!config || !key || !out) return fail(CP_ERR_USAGE, "null argument");
    auto it = keys().find(key);
    if (it == keys().end()) return fail(CP_ERR_USAGE, fmt::format("unknown configuration key '{}'", key));
    put(out, it->second.get(*config));
    return CP_OK;
  });
}

int cp_config_keys(char** out) {
  return guarded([&]() -> int {
    if (!out) return fail(CP_ERR_USAGE, "null argument");
    std::string s;
    for (const auto& [k, v] : keys()) s += k + "\n";
    put(out, s);
    return CP_OK;
  });
}

int cp_config_to_json(const cp_config* config, char** out) {
  return guarded([&]() -> int {
    if (!config || !out) return fail(CP_ERR_USAGE, "null argument");
    put(out, to_json(config->orch).dump(2));
    return CP_OK;
  });
}

int cp_check(const cp_kernel* kernel, const char* schedule_text, int oracle, const cp_config* config, char** report) {
  return guarded([&]() -> int {
    if (!kernel || !schedule_text) return fail(CP_ERR_USAGE, "null argument");
    cp_config defaults;
    const cp_config& cfg = config ? *config : defaults;
    const Kernel& k = kernel->kernel;
    std::string out;
    Schedule s;
    try {
      s = parse_schedule(schedule_text);
    } catch (const ScheduleSyntaxError& e) {
      out += fmt::format("validity: Invalid ({})\n", e.what());
      put(report, out);
      return CP_OK;
    }
    if (auto bad = prevalidate(s, k)) {
      out += fmt::format("validity: Invalid ({})\n", bad->reason);
      put(report, out);
      return CP_OK;
    }
    Schedule canon = canonicalize(s, k);
    out += fmt::format("validity: Valid\nschedule: {}\n", print_schedule(canon));
    auto verdict = check_legal(k, canon);
    if (auto* il = std::get_if<Illegal>(&verdict)) {
      out += fmt::format("legality: Illegal ({})\n", il->reason);
    } else if (auto* sf = std::get_if<SolverFailure>(&verdict)) {
      out += fmt::format("legality: SolverFailure ({})\n", sf->reason);
    } else {
      const auto& legal = std::get<Legal>(verdict);
      std::vector<std::string> params;
      for (std::size_t i = 0; i < legal.solver_results.size(); ++i) {
        const auto& r = legal.solver_results[i];
        if (r.skew_factor) params.push_back(fmt::format("{} sigma={}", print_command(canon.commands[i]), *r.skew_factor));
        if (!r.shifts.empty()) {
          params.push_back(fmt::format("{} shifts=({})", print_command(canon.commands[i]), fmt::join(r.shifts, ",")));
        }
      }
      out += "legality: Legal";
      if (!params.empty()) out += fmt::format(" ({})", fmt::join(params, "; "));
      out += "\n";
      if (oracle) {
        std::map<std::string, std::int64_t> small;
        for (const auto& p : k.params) small[p.name] = std::min(p.value, cfg.oracle_max_param);
        Kernel ks = with_params(k, small);
        auto cex = assert_semantics_preserved(ks, canon, cfg.oracle_seed);
        std::vector<std::string> sizes;
        for (const auto& p : ks.params) sizes.push_back(fmt::format("{}={}", p.name, p.value));
        out += fmt::format("oracle: {} at {}\n", cex ? "FAIL " + cex->to_string() : std::string("pass"),
                           fmt::join(sizes, ", "));
      }
    }
    put(report, out);
    return CP_OK;
  });
}

int cp_optimize(const cp_kernel* kernel, const cp_config* config, const char* record_path, char** summary) {
  return guarded([&]() -> int {
    if (!kernel || !config || !record_path) return fail(CP_ERR_USAGE, "null argument");
    std::string stem = kernel->kernel.name;
    RunRecord rec = run_one(kernel->kernel, config->orch, config->provider, config->clock, config->run_index, stem);
    write_run_record(rec, record_path);
    put(summary, summarize(rec));
    return abort_status(*rec.summary);
  });
}

int cp_replay(const char* record_path, const char* output_path, int* identical, char** summary) {
  return guarded([&]() -> int {
    if (!record_path) return fail(CP_ERR_USAGE, "null argument");
    std::ifstream f(record_path, std::ios::binary);
    if (!f) return fail(CP_ERR_IO, fmt::format("cannot open {}", record_path));
    std::stringstream ss;
    ss << f.rdbuf();
    std::string original = ss.str();
    RunRecord rec = parse_run_record(original);
    if (rec.header.kernel_source.empty()) return fail(CP_ERR_IO, "run record carries no kernel source");
    Kernel kernel = parse_kernel(rec.header.kernel_source);
    OrchestratorConfig orch = config_from_json(rec.header.config);
    std::vector<ScriptedTurn> turns;
    for (const auto& e : rec.exchanges) turns.push_back({e.user, e.assistant, e.usage});
    ScriptedProvider provider(std::move(turns));
    auto clock = make_clock(ClockKind::Auto, "scripted:", orch.backend);
    Backend backend(orch.backend);
    Orchestrator o(kernel, orch, provider, backend, *clock, rec.header.run_index);
    RunRecord again = o.run();
    std::string text = serialize(again);
    if (output_path) write_run_record(again, output_path);
    if (identical) *identical = text == original ? 1 : 0;
    put(summary, summarize(again));
    return abort_status(*again.summary);
  });
}

int cp_campaign(const char* const* kernel_paths, size_t count, int runs, int jobs, const cp_config* config,
                const char* output_dir, char** summary) {
  return guarded([&]() -> int {
    if (!kernel_paths || !config || !output_dir) return fail(CP_ERR_USAGE, "null argument");
    CampaignSpec spec;
    for (size_t i = 0; i < count; ++i) spec.kernels.emplace_back(kernel_paths[i]);
    spec.runs = runs;
    spec.jobs = jobs;
    spec.config = config->orch;
    spec.output_dir = output_dir;
    spec.provider = config->provider;
    spec.clock = config->clock;
    auto r = run_campaign(spec);
    put(summary, fmt::format("records: {}\ncompleted: {}\nskipped: {}\nincomplete: {}\n", r.records.size(),
                             r.completed, r.skipped, r.incomplete));
    if (r.incomplete > 0) return fail(CP_ERR_ABORTED, fmt::format("{} dialogue(s) aborted", r.incomplete));
    return CP_OK;
  });
}

int cp_report(const char* records_dir, const cp_config* config, const char* output_dir, char** text) {
  return guarded([&]() -> int {
    if (!records_dir) return fail(CP_ERR_USAGE, "null argument");
    cp_config defaults;
    const cp_config& cfg = config ? *config : defaults;
    auto records = load_records(records_dir);
    auto rep = build_report(records, cfg.report);
    if (output_dir) write_report(rep, output_dir);
    put(text, rep.text);
    return CP_OK;
  });
}

}  // extern "C"
