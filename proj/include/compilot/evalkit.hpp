#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "compilot/run_record.hpp"

namespace compilot {

struct RunSeries {
  std::vector<double> best;                   // best-so-far speedup indexed by T, best[0] = 1
  std::vector<std::string> categories;        // category of the novel proposal at each T >= 1
  std::vector<std::uint64_t> cumulative_tokens;  // after each exchange
  bool complete = true;
};

struct Pool {
  std::string instance;
  std::vector<RunSeries> runs;
};

enum class MedianConvention { Midpoint, Lower };

double median_of(std::vector<double> values, MedianConvention conv);

// Best-so-far value at T; runs that stopped early hold their final value.
double value_at(const RunSeries& run, int T);
std::vector<double> values_at(const Pool& pool, int T);

double median_at(const Pool& pool, int T, MedianConvention conv = MedianConvention::Midpoint);

// Exact median of the max-of-K (with replacement) distribution via order statistics.
double best_of_k_at(const Pool& pool, int K, int T, MedianConvention conv = MedianConvention::Midpoint);
double best_of_k_exact(std::vector<double> values, int K, MedianConvention conv = MedianConvention::Midpoint);
// Monte Carlo estimate of the same quantity.
double best_of_k_sampled(const std::vector<double>& values, int K, std::uint64_t seed, int samples = 10000,
                         MedianConvention conv = MedianConvention::Midpoint);

// Throws std::invalid_argument on empty input or a non-positive value.
double geomean(const std::vector<double>& values);

struct EstimateWithCI {
  double point = 0;
  double ci_low = 0;
  double ci_high = 0;
};

// Bootstrap iteration b draws from splitmix64(seed + b), so iterations are independent.
EstimateWithCI bootstrap_ci(const std::vector<Pool>& pools, int T, int iterations = 1000, std::uint64_t seed = 42,
                            MedianConvention conv = MedianConvention::Midpoint);

struct Viability {
  int total = 0;
  int runnable = 0;
  int invalid = 0;
  int illegal_like = 0;
  std::map<std::string, int> illegal_like_counts;  // illegal, solver_failure, crash
  double runnable_pct() const;
  double invalid_pct() const;
  double illegal_like_pct() const;
};

Viability viability_breakdown(const std::vector<Pool>& pools, int T);

// Per-exchange cumulative totals; throws InternalError if a record's running sums disagree.
std::vector<std::uint64_t> cumulative_token_series(const RunRecord& record);

RunSeries series_from_record(const RunRecord& record);

// Groups records by kernel id.
std::vector<Pool> pools_from_records(const std::vector<RunRecord>& records, bool include_incomplete);
std::vector<RunRecord> load_records(const std::filesystem::path& dir);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace compilot
