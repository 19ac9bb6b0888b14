#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "compilot/orchestrator.hpp"

namespace compilot {

// Throws IoError when unreadable, KernelParseError when malformed.
Kernel load_kernel(const std::filesystem::path& path);

enum class ClockKind { Auto, Logical, Steady };

// "http" or "scripted:<path>". A scripted directory supplies <kernel stem>.r<run>.jsonl
// (or <kernel stem>.jsonl shared by all runs); a scripted file is shared by all runs.
std::unique_ptr<LLMProvider> make_provider(const std::string& spec, const LLMProviderConfig& cfg,
                                           const std::string& kernel_stem, int run);
bool is_scripted(const std::string& provider_spec);

// Logical when both the provider and the backend are deterministic, unless forced.
std::unique_ptr<Clock> make_clock(ClockKind kind, const std::string& provider_spec, const BackendConfig& backend);

struct CampaignSpec {
  std::vector<std::filesystem::path> kernels;
  int runs = 1;
  OrchestratorConfig config;
  std::filesystem::path output_dir;
  int jobs = 1;
  std::string provider = "http";
  ClockKind clock = ClockKind::Auto;
};

struct CampaignResult {
  int completed = 0;
  int skipped = 0;  // already complete on disk
  int incomplete = 0;
  std::vector<std::filesystem::path> records;
};

// <kernel name>-<kernel hash>-r<run>-<config hash>.jsonl
std::string record_filename(const Kernel& kernel, int run, const OrchestratorConfig& cfg);

CampaignResult run_campaign(const CampaignSpec& spec);

}  // namespace compilot
