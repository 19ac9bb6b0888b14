#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace compilot::detail {

struct ProcessResult {
  int exit_code = -1;
  int signal = 0;
  bool timed_out = false;
  std::string out;
  std::string err;
};

// Runs argv[0] (PATH lookup) with extra environment entries; kills it after `timeout`.
ProcessResult run_process(const std::vector<std::string>& argv, const std::map<std::string, std::string>& env,
                          std::chrono::milliseconds timeout);

}  // namespace compilot::detail
