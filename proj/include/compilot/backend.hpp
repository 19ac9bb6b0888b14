#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "compilot/kernel.hpp"
#include "compilot/transform.hpp"

namespace compilot {

struct BackendSuccess {
  double time_ms = 0;
  double speedup = 0;  // baseline_ms / time_ms
  double min_ms = 0;
};
struct CompilerCrash {
  std::string message;
};
struct RuntimeCrash {
  std::string message;
};
struct Timeout {};

using BackendResult = std::variant<BackendSuccess, CompilerCrash, RuntimeCrash, Timeout>;

// "success", "compiler_crash", "runtime_crash" or "timeout".
std::string result_kind(const BackendResult& r);
std::string result_message(const BackendResult& r);

enum class BackendMode { Real, Simulated };

// Simulated time of one computation:
//   instances * unit_cost_ms / min(threads, avg trip count of its parallel loop) * locality
// where locality multiplies tile2d / tile3d / unroll once per such command touching the
// computation's nest, and `fused` once if the computation shares a loop it did not share
// originally. Parallel loops nested under sequential loops add region_overhead_ms per entry.
struct CostModel {
  double unit_cost_ms = 1e-6;
  int threads = 8;
  double tile2d = 0.8;
  double tile3d = 0.7;
  double unroll = 0.95;
  double fused = 0.9;
  double region_overhead_ms = 0.0;
};

struct BackendConfig {
  BackendMode mode = BackendMode::Simulated;
  std::string compiler = "cc -O3 -fopenmp {src} -o {bin}";
  int timeout_s = 60;
  int warmups = 1;
  int reps = 5;
  int threads = 0;                  // OMP_NUM_THREADS for real runs; 0 leaves the environment alone
  std::filesystem::path work_dir;  // empty: a fresh directory under the system temp dir
  CostModel model;
};

void validate(const BackendConfig& cfg);

struct Measurement {
  double median_ms = 0;
  double min_ms = 0;
  std::vector<double> samples;
  std::optional<std::uint64_t> checksum;
};

// Midpoint-averaged median; throws std::invalid_argument on empty input.
double median_of(std::vector<double> values);

double simulate_cost(const TransformedKernel& tk, const Kernel& original, const CostModel& model);

struct TimingSlot {
  std::uint64_t sequence = 0;
  std::chrono::steady_clock::time_point start;
  std::chrono::steady_clock::time_point end;
};

// Every timed execution, in acquisition order. Timed runs never overlap.
std::vector<TimingSlot> timing_log();

class Backend {
 public:
  explicit Backend(BackendConfig cfg);
  ~Backend();
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  const BackendConfig& config() const { return cfg_; }

  // Throws BackendError when the untransformed kernel fails to build or run.
  Measurement measure_baseline(const Kernel& kernel);
  BackendResult run_schedule(const TransformedKernel& tk, const Kernel& original, const Measurement& baseline);

 private:
  std::variant<Measurement, BackendResult> measure(const TransformedKernel& tk, const Kernel& original);

  BackendConfig cfg_;
  std::filesystem::path dir_;
  bool owns_dir_ = false;
  std::uint64_t counter_ = 0;
};

}  // namespace compilot
