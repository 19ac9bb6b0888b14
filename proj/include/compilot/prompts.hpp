#pragma once

#include <string>
#include <vector>

namespace compilot {

struct PromptOptions {
  bool hardware_in_prompt = true;
  bool reasoning_required = true;
};

std::string system_prompt(const PromptOptions& options = {});
std::string analysis_request();
std::string begin_instruction(const PromptOptions& options = {});
std::string continuation_prompt();

std::string invalid_feedback(const std::string& reason);
std::string unparseable_feedback(const std::string& reason);
std::string illegal_feedback(const std::string& reason);
std::string solver_failure_feedback(const std::string& reason);
std::string crash_feedback(const std::string& message);
std::string success_feedback(double time_ms, double speedup);
std::string duplicate_feedback(const std::string& schedule);

// Words that identify a feedback category; absent from content-free turns.
const std::vector<std::string>& feedback_keywords();

}  // namespace compilot
