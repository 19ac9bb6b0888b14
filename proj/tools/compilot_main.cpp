#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "compilot/compilot.h"

namespace {

// TOML/INI config that must declare `version = 1` at top level.
class VersionedConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    bool seen = false;
    for (auto it = items.begin(); it != items.end();) {
      if (it->parents.empty() && it->name == "version") {
        if (it->inputs.size() != 1 || it->inputs[0] != "1") {
          throw CLI::ConversionError("config file version must be 1");
        }
        seen = true;
        it = items.erase(it);
      } else {
        ++it;
      }
    }
    if (!seen) throw CLI::ConversionError("config file must declare version = 1");
    return items;
  }
};

struct Setting {
  CLI::Option* option;
  std::string key;
  std::string value;
  const char* forced = nullptr;  // flags set a fixed value
};

class Settings {
 public:
  void option(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto s = std::make_unique<Setting>();
    s->key = key;
    s->option = app->add_option(flag, s->value, help);
    items_.push_back(std::move(s));
  }
  void flag(CLI::App* app, const std::string& flag, const std::string& key, const char* value, const std::string& help) {
    auto s = std::make_unique<Setting>();
    s->key = key;
    s->forced = value;
    s->option = app->add_flag(flag, help);
    items_.push_back(std::move(s));
  }
  int apply(cp_config* cfg) const {
    for (const auto& s : items_) {
      if (s->option->count() == 0) continue;
      int rc = cp_config_set(cfg, s->key.c_str(), s->forced ? s->forced : s->value.c_str());
      if (rc != CP_OK) return rc;
    }
    return CP_OK;
  }

 private:
  std::vector<std::unique_ptr<Setting>> items_;
};

void dialogue_options(CLI::App* app, Settings& s) {
  s.option(app, "--provider", "provider.spec", "http or scripted:<transcript file or directory>");
  s.option(app, "--backend", "backend.mode", "real or simulated");
  s.option(app, "--max-iters", "orchestrator.max_iterations", "iteration limit T_max");
  s.option(app, "--max-quit-pushes", "orchestrator.max_quit_pushes", "continuation prompts after quit requests");
  s.option(app, "--max-exchanges", "orchestrator.max_exchanges", "conversation length limit");
  s.flag(app, "--no-feedback", "orchestrator.feedback_enabled", "false", "send content-free continuation prompts");
  s.flag(app, "--no-analysis", "orchestrator.analysis_phase_enabled", "false", "skip the program analysis exchange");
  s.flag(app, "--no-reasoning", "orchestrator.reasoning_required", "false", "ask for schedule tags only");
  s.flag(app, "--no-hardware", "orchestrator.hardware_in_prompt", "false", "omit the hardware description");
  s.option(app, "--endpoint", "provider.endpoint", "chat-completions URL");
  s.option(app, "--model", "provider.model", "model name");
  s.option(app, "--temperature", "provider.temperature", "sampling temperature (default: provider default)");
  s.option(app, "--max-output-tokens", "provider.max_output_tokens", "reply token cap");
  s.option(app, "--retries", "provider.retries", "transport retries");
  s.option(app, "--backoff-ms", "provider.backoff_ms", "initial retry backoff");
  s.option(app, "--api-key-env", "provider.api_key_env", "environment variable holding the API key");
  s.option(app, "--provider-timeout", "provider.timeout_s", "request timeout in seconds");
  s.option(app, "--compiler", "backend.compiler", "compiler command template with {src} and {bin}");
  s.option(app, "--timeout", "backend.timeout_s", "per-run timeout in seconds");
  s.option(app, "--warmups", "backend.warmups", "untimed runs before measuring");
  s.option(app, "--reps", "backend.reps", "timed runs (median reported)");
  s.option(app, "--threads", "backend.threads", "OMP_NUM_THREADS for timed runs (0: inherit)");
  s.option(app, "--work-dir", "backend.work_dir", "directory for generated sources and binaries");
  s.option(app, "--model-threads", "backend.model.threads", "simulated backend thread count");
  s.option(app, "--unit-cost", "backend.model.unit_cost_ms", "simulated cost per body instance (ms)");
  s.option(app, "--clock", "run.clock", "auto, logical or steady");
}

int report_error(int rc, const std::string& what) {
  std::fprintf(stderr, "compilot: %s: %s\n", what.c_str(), cp_last_error());
  return rc;
}

void print_and_free(char* s, std::FILE* to = stdout) {
  if (!s) return;
  std::fputs(s, to);
  cp_string_free(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop LLM loop-transformation scheduler"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<VersionedConfig>());
  app.set_config("--config", "", "TOML configuration file (flags take precedence)");
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");
  app.set_version_flag("--version", cp_version());

  Settings settings;

  auto* optimize = app.add_subcommand("optimize", "run one optimization dialogue");
  std::string opt_kernel, opt_record = "run.jsonl";
  optimize->add_option("kernel", opt_kernel, "kernel file")->required();
  optimize->add_option("--record", opt_record, "run record output path");
  settings.option(optimize, "--run-index", "run.index", "run index stored in the record");
  dialogue_options(optimize, settings);

  auto* check = app.add_subcommand("check", "classify a schedule without running it");
  std::string chk_kernel, chk_schedule;
  bool chk_oracle = false;
  check->add_option("kernel", chk_kernel, "kernel file")->required();
  check->add_option("--schedule", chk_schedule, "schedule text")->required();
  check->add_flag("--oracle", chk_oracle, "compare against the interpreter at reduced sizes");
  settings.option(check, "--oracle-max-param", "check.oracle_max_param", "parameter cap for the oracle");
  settings.option(check, "--seed", "check.seed", "oracle input seed");

  auto* campaign = app.add_subcommand("campaign", "run many dialogues per kernel (resumable)");
  std::vector<std::string> camp_kernels;
  std::string camp_out = "runs";
  int camp_runs = 1, camp_jobs = 1;
  campaign->add_option("kernels", camp_kernels, "kernel files")->required();
  campaign->add_option("--runs", camp_runs, "dialogues per kernel")->check(CLI::PositiveNumber);
  campaign->add_option("--jobs", camp_jobs, "concurrent dialogues")->check(CLI::PositiveNumber);
  campaign->add_option("--out", camp_out, "record directory");
  dialogue_options(campaign, settings);

  auto* report = app.add_subcommand("report", "statistics over run records");
  std::string rep_dir, rep_out;
  report->add_option("records", rep_dir, "record directory")->required();
  report->add_option("--out", rep_out, "directory for CSV output");
  settings.option(report, "--at", "report.at", "iteration indices, e.g. 5 or 0-30 or 1,10,30");
  settings.option(report, "--bestof", "report.bestof", "best-of-K values, e.g. 1,5");
  settings.option(report, "--bootstrap", "report.bootstrap", "bootstrap iterations");
  settings.option(report, "--seed", "report.seed", "bootstrap seed");
  settings.flag(report, "--include-incomplete", "report.include_incomplete", "true", "use aborted dialogues too");
  settings.option(report, "--median", "report.median", "midpoint or lower");

  auto* replay = app.add_subcommand("replay", "re-run a recorded dialogue from its transcript");
  std::string rp_record, rp_out;
  bool rp_verify = false;
  replay->add_option("record", rp_record, "run record")->required();
  replay->add_option("--out", rp_out, "write the replayed record here");
  replay->add_flag("--verify", rp_verify, "fail unless the replay is byte-identical");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : CP_ERR_USAGE;
  }

  if (cp_set_log_level(log_level.c_str()) != CP_OK) return report_error(CP_ERR_USAGE, "--log-level");

  cp_config* raw = nullptr;
  if (cp_config_new(&raw) != CP_OK) return report_error(CP_ERR_INTERNAL, "config");
  std::unique_ptr<cp_config, decltype(&cp_config_free)> cfg(raw, cp_config_free);
  if (int rc = settings.apply(cfg.get()); rc != CP_OK) return report_error(rc, "configuration");

  auto load = [](const std::string& path, cp_kernel** k) { return cp_kernel_load(path.c_str(), k); };

  if (optimize->parsed()) {
    cp_kernel* k = nullptr;
    if (int rc = load(opt_kernel, &k); rc != CP_OK) return report_error(rc, opt_kernel);
    char* summary = nullptr;
    int rc = cp_optimize(k, cfg.get(), opt_record.c_str(), &summary);
    cp_kernel_free(k);
    print_and_free(summary);
    if (rc != CP_OK) return report_error(rc, "optimize");
    return 0;
  }
  if (check->parsed()) {
    cp_kernel* k = nullptr;
    if (int rc = load(chk_kernel, &k); rc != CP_OK) return report_error(rc, chk_kernel);
    char* out = nullptr;
    int rc = cp_check(k, chk_schedule.c_str(), chk_oracle ? 1 : 0, cfg.get(), &out);
    cp_kernel_free(k);
    print_and_free(out);
    if (rc != CP_OK) return report_error(rc, "check");
    return 0;
  }
  if (campaign->parsed()) {
    std::vector<const char*> paths;
    for (const auto& p : camp_kernels) paths.push_back(p.c_str());
    char* summary = nullptr;
    int rc = cp_campaign(paths.data(), paths.size(), camp_runs, camp_jobs, cfg.get(), camp_out.c_str(), &summary);
    print_and_free(summary);
    if (rc != CP_OK) return report_error(rc, "campaign");
    return 0;
  }
  if (report->parsed()) {
    char* text = nullptr;
    int rc = cp_report(rep_dir.c_str(), cfg.get(), rep_out.empty() ? nullptr : rep_out.c_str(), &text);
    print_and_free(text);
    if (rc != CP_OK) return report_error(rc, "report");
    return 0;
  }
  if (replay->parsed()) {
    char* summary = nullptr;
    int identical = 0;
    int rc = cp_replay(rp_record.c_str(), rp_out.empty() ? nullptr : rp_out.c_str(), &identical, &summary);
    print_and_free(summary);
    std::printf("identical: %s\n", identical ? "yes" : "no");
    if (rc != CP_OK) return report_error(rc, "replay");
    if (rp_verify && !identical) {
      std::fprintf(stderr, "compilot: replay differs from %s\n", rp_record.c_str());
      return CP_ERR_ABORTED;
    }
    return 0;
  }
  return CP_ERR_USAGE;
}
