#include "compilot/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "compilot/error.hpp"

namespace compilot {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double median_of(std::vector<double> values, MedianConvention conv) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  if (conv == MedianConvention::Lower) return values[n / 2 - 1];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double value_at(const RunSeries& run, int T) {
  if (T < 0) throw std::invalid_argument("negative iteration index");
  if (run.best.empty()) return 1.0;
  return run.best[std::min<std::size_t>(static_cast<std::size_t>(T), run.best.size() - 1)];
}

std::vector<double> values_at(const Pool& pool, int T) {
  std::vector<double> v;
  v.reserve(pool.runs.size());
  for (const auto& r : pool.runs) v.push_back(value_at(r, T));
  return v;
}

double median_at(const Pool& pool, int T, MedianConvention conv) {
  if (pool.runs.empty()) throw std::invalid_argument("empty pool " + pool.instance);
  return median_of(values_at(pool, T), conv);
}

namespace {

// Sign of 2*c^K - n^K.
int compare_half(std::uint64_t c, std::uint64_t n, int K) {
  if (static_cast<double>(K) * std::log2(static_cast<double>(n)) < 120.0) {
    __int128 a = 2, b = 1;
    for (int i = 0; i < K; ++i) {
      a *= c;
      b *= n;
    }
    return a < b ? -1 : (a > b ? 1 : 0);
  }
  long double lhs = std::log(2.0L) + K * std::log(static_cast<long double>(c));
  long double rhs = K * std::log(static_cast<long double>(n));
  return lhs < rhs ? -1 : 1;
}

}  // namespace

double best_of_k_exact(std::vector<double> values, int K, MedianConvention conv) {
  if (values.empty()) throw std::invalid_argument("best-of-K over an empty pool");
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  std::sort(values.begin(), values.end());
  const std::uint64_t n = values.size();
  std::optional<double> ge, gt;
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 < n && values[i + 1] == values[i]) continue;
    int cmp = compare_half(i + 1, n, K);
    if (!ge && cmp >= 0) ge = values[i];
    if (!gt && cmp > 0) {
      gt = values[i];
      break;
    }
  }
  if (conv == MedianConvention::Lower) return *ge;
  return (*ge + *gt) / 2.0;
}

double best_of_k_at(const Pool& pool, int K, int T, MedianConvention conv) {
  if (pool.runs.empty()) throw std::invalid_argument("empty pool " + pool.instance);
  return best_of_k_exact(values_at(pool, T), K, conv);
}

double best_of_k_sampled(const std::vector<double>& values, int K, std::uint64_t seed, int samples,
                         MedianConvention conv) {
  if (values.empty()) throw std::invalid_argument("best-of-K over an empty pool");
  if (K < 1 || samples < 1) throw std::invalid_argument("K and samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> maxima(static_cast<std::size_t>(samples));
  for (auto& m : maxima) {
    double best = values[pick(rng)];
    for (int k = 1; k < K; ++k) best = std::max(best, values[pick(rng)]);
    m = best;
  }
  return median_of(std::move(maxima), conv);
}

double geomean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("geometric mean of an empty set");
  bool same = true;
  double logs = 0;
  for (double v : values) {
    if (!(v > 0)) throw std::invalid_argument(fmt::format("geometric mean of non-positive value {}", v));
    same = same && v == values.front();
    logs += std::log(v);
  }
  if (same) return values.front();
  return std::exp(logs / static_cast<double>(values.size()));
}

namespace {

double percentile(const std::vector<double>& sorted, double p) {
  double pos = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  if (sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

EstimateWithCI bootstrap_ci(const std::vector<Pool>& pools, int T, int iterations, std::uint64_t seed,
                            MedianConvention conv) {
  if (pools.empty()) throw std::invalid_argument("bootstrap over an empty pool list");
  if (iterations < 1) throw std::invalid_argument("bootstrap needs at least one iteration");
  std::vector<std::vector<double>> values;
  std::vector<double> medians;
  for (const auto& p : pools) {
    if (p.runs.empty()) throw std::invalid_argument("empty pool " + p.instance);
    values.push_back(values_at(p, T));
    medians.push_back(median_of(values.back(), conv));
  }
  EstimateWithCI out;
  out.point = geomean(medians);

  std::vector<double> dist(static_cast<std::size_t>(iterations));
  std::vector<double> sample, boot(values.size());
  for (int b = 0; b < iterations; ++b) {
    std::mt19937_64 rng(splitmix64(seed + static_cast<std::uint64_t>(b)));
    for (std::size_t p = 0; p < values.size(); ++p) {
      const auto& v = values[p];
      std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
      sample.resize(v.size());
      for (auto& s : sample) s = v[pick(rng)];
      boot[p] = median_of(sample, conv);
    }
    dist[static_cast<std::size_t>(b)] = geomean(boot);
  }
  std::sort(dist.begin(), dist.end());
  out.ci_low = percentile(dist, 0.025);
  out.ci_high = percentile(dist, 0.975);
  return out;
}

double Viability::runnable_pct() const { return total ? 100.0 * runnable / total : 0.0; }
double Viability::invalid_pct() const { return total ? 100.0 * invalid / total : 0.0; }
double Viability::illegal_like_pct() const { return total ? 100.0 * illegal_like / total : 0.0; }

Viability viability_breakdown(const std::vector<Pool>& pools, int T) {
  Viability v;
  for (const auto& p : pools) {
    for (const auto& r : p.runs) {
      std::size_t n = std::min<std::size_t>(r.categories.size(), static_cast<std::size_t>(std::max(T, 0)));
      for (std::size_t i = 0; i < n; ++i) {
        const std::string& c = r.categories[i];
        ++v.total;
        if (c == "success") {
          ++v.runnable;
        } else if (c == "invalid") {
          ++v.invalid;
        } else {
          ++v.illegal_like;
          ++v.illegal_like_counts[c];
        }
      }
    }
  }
  return v;
}

std::vector<std::uint64_t> cumulative_token_series(const RunRecord& record) {
  std::vector<std::uint64_t> out;
  TokenUsage sum;
  for (const auto& e : record.exchanges) {
    sum += e.usage;
    if (!(sum == e.cumulative)) {
      throw InternalError(fmt::format("exchange {}: cumulative tokens {} differ from running sum {}", e.index,
                                      e.cumulative.total(), sum.total()));
    }
    out.push_back(sum.total());
  }
  return out;
}

RunSeries series_from_record(const RunRecord& record) {
  RunSeries s;
  s.best.push_back(1.0);
  for (const auto& e : record.exchanges) {
    if (!e.novel) continue;
    s.best.push_back(e.best);
    s.categories.push_back(e.category);
  }
  s.cumulative_tokens = cumulative_token_series(record);
  s.complete = record.summary && record.summary->complete;
  return s;
}

std::vector<Pool> pools_from_records(const std::vector<RunRecord>& records, bool include_incomplete) {
  std::map<std::string, Pool> by_id;
  for (const auto& r : records) {
    RunSeries s = series_from_record(r);
    if (!s.complete && !include_incomplete) continue;
    Pool& p = by_id[r.header.kernel_id];
    p.instance = r.header.kernel_id;
    p.runs.push_back(std::move(s));
  }
  std::vector<Pool> out;
  for (auto& [id, p] : by_id) out.push_back(std::move(p));
  return out;
}

std::vector<RunRecord> load_records(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto& f : files) out.push_back(read_run_record(f));
  return out;
}

}  // namespace compilot
