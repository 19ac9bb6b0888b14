#include "compilot/llm.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "compilot/error.hpp"

namespace compilot {

using nlohmann::json;

std::string role_name(Role r) {
  switch (r) {
    case Role::System:
      return "system";
    case Role::User:
      return "user";
    case Role::Assistant:
      return "assistant";
  }
  return "user";
}

Role parse_role(const std::string& name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  throw std::invalid_argument("unknown role " + name);
}

void check_history(const std::vector<ChatMessage>& history) {
  if (history.empty()) throw std::invalid_argument("empty chat history");
  if (history.front().role != Role::System) throw std::invalid_argument("chat history must start with a system message");
}

void validate(const LLMProviderConfig& cfg) {
  if (cfg.retry.retries < 0) throw ConfigError("provider retries must be >= 0");
  if (cfg.temperature && (*cfg.temperature < 0 || *cfg.temperature > 2)) {
    throw ConfigError("provider temperature must be in [0, 2]");
  }
  if (cfg.max_output_tokens && *cfg.max_output_tokens < 1) throw ConfigError("max output tokens must be >= 1");
  if (cfg.endpoint.empty()) throw ConfigError("provider endpoint is empty");
}

std::string chat_request_body(const std::vector<ChatMessage>& history, const LLMProviderConfig& cfg) {
  json body;
  body["model"] = cfg.model;
  json msgs = json::array();
  for (const auto& m : history) msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  body["messages"] = std::move(msgs);
  if (cfg.temperature) body["temperature"] = *cfg.temperature;
  if (cfg.max_output_tokens) body["max_tokens"] = *cfg.max_output_tokens;
  return body.dump();
}

ChatReply parse_chat_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError(fmt::format("malformed provider response: {}", e.what()));
  }
  if (j.contains("error")) {
    std::string msg = j["error"].is_object() ? j["error"].value("message", j["error"].dump()) : j["error"].dump();
    throw TransportError("provider error: " + msg);
  }
  try {
    const auto& choice = j.at("choices").at(0);
    ChatReply r;
    r.message.role = Role::Assistant;
    const auto& content = choice.at("message").at("content");
    r.message.content = content.is_null() ? "" : content.get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      r.usage.input_tokens = j["usage"].value("prompt_tokens", std::uint64_t{0});
      r.usage.output_tokens = j["usage"].value("completion_tokens", std::uint64_t{0});
    }
    return r;
  } catch (const json::exception& e) {
    throw TransportError(fmt::format("malformed provider response: {}", e.what()));
  }
}

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (auto p = text.find(secret); p != std::string::npos; p = text.find(secret, p + 3)) text.replace(p, secret.size(), "***");
  return text;
}

TokenUsage estimate_usage(const std::vector<ChatMessage>& history, const std::string& reply) {
  std::uint64_t in = 0;
  for (const auto& m : history) in += m.content.size();
  return {(in + 3) / 4, (reply.size() + 3) / 4};
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptedTurn> turns, std::string name)
    : turns_(std::move(turns)), name_(std::move(name)) {}

std::vector<ScriptedTurn> ScriptedProvider::parse_script(const std::string& text) {
  std::vector<ScriptedTurn> turns;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(fmt::format("transcript line {}: {}", lineno, e.what()));
    }
    if (j.value("type", "") != "exchange") continue;
    ScriptedTurn t;
    if (!j.contains("assistant") || !j["assistant"].is_string()) {
      throw IoError(fmt::format("transcript line {}: exchange without assistant text", lineno));
    }
    t.assistant = j["assistant"].get<std::string>();
    if (j.contains("user") && j["user"].is_string()) t.user = j["user"].get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      t.usage = TokenUsage{j["usage"].value("input", std::uint64_t{0}), j["usage"].value("output", std::uint64_t{0})};
    }
    turns.push_back(std::move(t));
  }
  return turns;
}

std::unique_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open transcript " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return std::make_unique<ScriptedProvider>(parse_script(ss.str()));
}

ChatReply ScriptedProvider::send(const std::vector<ChatMessage>& history) {
  check_history(history);
  std::lock_guard lock(mu_);
  if (next_ >= turns_.size()) throw TransportError("script exhausted");
  const ScriptedTurn& t = turns_[next_];
  if (t.user && (history.back().role != Role::User || history.back().content != *t.user)) {
    throw ScriptMismatchError(fmt::format("transcript mismatch at turn {}: user message differs from recording", next_));
  }
  ++next_;
  ChatReply r;
  r.message = {Role::Assistant, t.assistant};
  r.usage = t.usage ? *t.usage : estimate_usage(history, t.assistant);
  return r;
}

std::size_t ScriptedProvider::consumed() const {
  std::lock_guard lock(mu_);
  return next_;
}

}  // namespace compilot
