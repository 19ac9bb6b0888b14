#include "compilot/campaign.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "compilot/error.hpp"

namespace compilot {

Kernel load_kernel(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read kernel file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_kernel(ss.str());
}

bool is_scripted(const std::string& provider_spec) { return provider_spec.rfind("scripted:", 0) == 0; }

std::unique_ptr<LLMProvider> make_provider(const std::string& spec, const LLMProviderConfig& cfg,
                                           const std::string& kernel_stem, int run) {
  if (spec == "http") return std::make_unique<HttpProvider>(cfg);
  if (!is_scripted(spec)) throw ConfigError("unknown provider '" + spec + "' (expected http or scripted:<path>)");
  std::filesystem::path p = spec.substr(9);
  if (std::filesystem::is_directory(p)) {
    auto per_run = p / fmt::format("{}.r{}.jsonl", kernel_stem, run);
    if (std::filesystem::exists(per_run)) return ScriptedProvider::from_file(per_run);
    auto shared = p / (kernel_stem + ".jsonl");
    if (std::filesystem::exists(shared)) return ScriptedProvider::from_file(shared);
    throw IoError(fmt::format("no transcript for {} run {} in {}", kernel_stem, run, p.string()));
  }
  return ScriptedProvider::from_file(p);
}

std::unique_ptr<Clock> make_clock(ClockKind kind, const std::string& provider_spec, const BackendConfig& backend) {
  bool logical = kind == ClockKind::Logical ||
                 (kind == ClockKind::Auto && is_scripted(provider_spec) && backend.mode == BackendMode::Simulated);
  if (logical) return std::make_unique<LogicalClock>();
  return std::make_unique<SteadyClock>();
}

std::string record_filename(const Kernel& kernel, int run, const OrchestratorConfig& cfg) {
  return fmt::format("{}-{:016x}-r{}-{}.jsonl", kernel.name, kernel_hash(kernel), run, config_hash(cfg));
}

CampaignResult run_campaign(const CampaignSpec& spec) {
  if (spec.runs < 1) throw ConfigError("runs per kernel must be >= 1");
  if (spec.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (spec.kernels.empty()) throw ConfigError("campaign has no kernels");
  validate(spec.config);
  std::filesystem::create_directories(spec.output_dir);

  struct Task {
    std::size_t kernel;
    int run;
    std::filesystem::path out;
  };
  std::vector<Kernel> kernels;
  std::vector<Task> tasks;
  CampaignResult result;
  for (std::size_t i = 0; i < spec.kernels.size(); ++i) {
    kernels.push_back(load_kernel(spec.kernels[i]));
    for (int r = 0; r < spec.runs; ++r) {
      auto out = spec.output_dir / record_filename(kernels.back(), r, spec.config);
      result.records.push_back(out);
      if (std::filesystem::exists(out)) {
        try {
          auto rec = read_run_record(out);
          if (rec.summary && rec.summary->complete) {
            ++result.skipped;
            continue;
          }
        } catch (const IoError& e) {
          spdlog::warn("rerunning {}: {}", out.string(), e.what());
        }
      }
      tasks.push_back({i, r, out});
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      std::size_t t = next++;
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      try {
        std::string stem = spec.kernels[task.kernel].stem().string();
        auto provider = make_provider(spec.provider, spec.config.provider, stem, task.run);
        auto clock = make_clock(spec.clock, spec.provider, spec.config.backend);
        Backend backend(spec.config.backend);
        Orchestrator orch(kernels[task.kernel], spec.config, *provider, backend, *clock, task.run);
        RunRecord rec = orch.run();
        write_run_record(rec, task.out);
        std::lock_guard lock(mu);
        if (rec.summary->complete) {
          ++result.completed;
        } else {
          ++result.incomplete;
        }
        spdlog::info("{} run {}: {} (best {:.3f}x)", kernels[task.kernel].name, task.run,
                     rec.summary->terminal_reason, rec.summary->best_speedup);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };
  int n = std::min<int>(spec.jobs, static_cast<int>(tasks.size()));
  std::vector<std::thread> threads;
  for (int i = 1; i < n; ++i) threads.emplace_back(worker);
  if (n > 0) worker();
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
  return result;
}

}  // namespace compilot
