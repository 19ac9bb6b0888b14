#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "compilot/evalkit.hpp"

namespace compilot {

struct ReportOptions {
  std::vector<int> at;       // iteration indices; empty: 0..longest run
  std::vector<int> best_of;  // K values; median@T is always reported
  int bootstrap_iterations = 1000;
  std::uint64_t seed = 42;
  bool include_incomplete = false;
  MedianConvention convention = MedianConvention::Midpoint;
};

struct Report {
  std::string text;                            // human-readable summary
  std::map<std::string, std::string> files;    // CSV file name -> contents
};

Report build_report(const std::vector<RunRecord>& records, const ReportOptions& options);
void write_report(const Report& report, const std::filesystem::path& dir);

}  // namespace compilot
