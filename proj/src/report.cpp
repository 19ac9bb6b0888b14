#include "compilot/report.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "compilot/error.hpp"

namespace compilot {

namespace {

std::string num(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

Report build_report(const std::vector<RunRecord>& records, const ReportOptions& options) {
  auto pools = pools_from_records(records, options.include_incomplete);
  std::size_t skipped = 0;
  for (const auto& r : records)
    if (!(r.summary && r.summary->complete)) ++skipped;
  if (pools.empty()) throw ConfigError("no usable run records");

  std::vector<int> at = options.at;
  if (at.empty()) {
    std::size_t longest = 0;
    for (const auto& p : pools)
      for (const auto& r : p.runs) longest = std::max(longest, r.best.size());
    for (std::size_t t = 0; t < longest; ++t) at.push_back(static_cast<int>(t));
  }
  for (int t : at)
    if (t < 0) throw ConfigError("iteration index must be >= 0");
  for (int k : options.best_of)
    if (k < 1) throw ConfigError("best-of K must be >= 1");

  Report rep;
  std::string header = "instance,T,runs,median";
  for (int k : options.best_of) header += fmt::format(",bestof_{}", k);
  std::string per = header + "\n";
  for (const auto& p : pools) {
    for (int t : at) {
      per += fmt::format("{},{},{},{}", p.instance, t, p.runs.size(), num(median_at(p, t, options.convention)));
      for (int k : options.best_of) per += "," + num(best_of_k_at(p, k, t, options.convention));
      per += "\n";
    }
  }
  rep.files["per_instance.csv"] = per;

  std::string agg = "T,geomean_median,ci_low,ci_high";
  for (int k : options.best_of) agg += fmt::format(",geomean_bestof_{}", k);
  agg += "\n";
  rep.text = fmt::format("{} instance(s), {} run record(s){}\n\n", pools.size(), records.size(),
                         skipped && !options.include_incomplete ? fmt::format(", {} incomplete skipped", skipped) : "");
  rep.text += fmt::format("{:>5} {:>10} {:>21}", "T", "median@T", "95% CI");
  for (int k : options.best_of) rep.text += fmt::format(" {:>12}", fmt::format("BestOf{}@T", k));
  rep.text += "\n";
  for (int t : at) {
    std::vector<double> medians;
    for (const auto& p : pools) medians.push_back(median_at(p, t, options.convention));
    auto ci = bootstrap_ci(pools, t, options.bootstrap_iterations, options.seed, options.convention);
    agg += fmt::format("{},{},{},{}", t, num(ci.point), num(ci.ci_low), num(ci.ci_high));
    rep.text += fmt::format("{:>5} {:>10.4f} [{:>8.4f}, {:>8.4f}]", t, ci.point, ci.ci_low, ci.ci_high);
    for (int k : options.best_of) {
      std::vector<double> b;
      for (const auto& p : pools) b.push_back(best_of_k_at(p, k, t, options.convention));
      double g = geomean(b);
      agg += "," + num(g);
      rep.text += fmt::format(" {:>12.4f}", g);
    }
    agg += "\n";
    rep.text += "\n";
  }
  rep.files["aggregate.csv"] = agg;

  std::string via = "T,proposals,runnable_pct,invalid_pct,illegal_like_pct,illegal,solver_failure,crash\n";
  for (int t : at) {
    auto v = viability_breakdown(pools, t);
    auto count = [&](const char* c) {
      auto it = v.illegal_like_counts.find(c);
      return it == v.illegal_like_counts.end() ? 0 : it->second;
    };
    via += fmt::format("{},{},{:.2f},{:.2f},{:.2f},{},{},{}\n", t, v.total, v.runnable_pct(), v.invalid_pct(),
                       v.illegal_like_pct(), count("illegal"), count("solver_failure"), count("crash"));
  }
  rep.files["viability.csv"] = via;
  auto v = viability_breakdown(pools, at.back());
  rep.text += fmt::format("\nproposals up to T={}: {} ({:.1f}% runnable, {:.1f}% invalid, {:.1f}% illegal-like)\n",
                          at.back(), v.total, v.runnable_pct(), v.invalid_pct(), v.illegal_like_pct());

  std::string tok = "instance,run_index,exchange,T,cumulative_tokens\n";
  for (const auto& r : records) {
    if (!(r.summary && r.summary->complete) && !options.include_incomplete) continue;
    auto series = cumulative_token_series(r);
    for (std::size_t i = 0; i < r.exchanges.size(); ++i) {
      tok += fmt::format("{},{},{},{},{}\n", r.header.kernel_id, r.header.run_index, r.exchanges[i].index,
                         r.exchanges[i].iteration, series[i]);
    }
  }
  rep.files["tokens.csv"] = tok;
  return rep;
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : report.files) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    f << content;
  }
  std::ofstream f(dir / "report.txt", std::ios::binary);
  if (!f) throw IoError("cannot write " + (dir / "report.txt").string());
  f << report.text;
}

}  // namespace compilot
