#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace compilot {

enum class Role { System, User, Assistant };

std::string role_name(Role r);
Role parse_role(const std::string& name);

struct ChatMessage {
  Role role = Role::User;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct TokenUsage {
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;

  std::uint64_t total() const { return input_tokens + output_tokens; }
  TokenUsage& operator+=(const TokenUsage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

struct ChatReply {
  ChatMessage message;
  TokenUsage usage;
};

// Throws std::invalid_argument unless the history is non-empty and starts with a system message.
void check_history(const std::vector<ChatMessage>& history);

class LLMProvider {
 public:
  virtual ~LLMProvider() = default;
  // Throws TransportError once retries are exhausted.
  virtual ChatReply send(const std::vector<ChatMessage>& history) = 0;
  virtual std::string describe() const = 0;
};

struct RetryPolicy {
  int retries = 3;
  std::chrono::milliseconds backoff{1000};  // doubled after each attempt
};

struct LLMProviderConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  std::optional<double> temperature;  // provider default when unset
  std::optional<int> max_output_tokens;
  RetryPolicy retry;
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_s = 300;
};

void validate(const LLMProviderConfig& cfg);

// Chat-completions request body for `history`.
std::string chat_request_body(const std::vector<ChatMessage>& history, const LLMProviderConfig& cfg);
// Parses a chat-completions response; throws TransportError when malformed.
ChatReply parse_chat_response(const std::string& body);
// Replaces every occurrence of `secret` with "***".
std::string redact(std::string text, const std::string& secret);

class HttpProvider : public LLMProvider {
 public:
  explicit HttpProvider(LLMProviderConfig cfg);
  ChatReply send(const std::vector<ChatMessage>& history) override;
  std::string describe() const override;

 private:
  LLMProviderConfig cfg_;
};

struct ScriptedTurn {
  std::optional<std::string> user;  // expected last user message, when recorded
  std::string assistant;
  std::optional<TokenUsage> usage;
};

// Replays recorded assistant turns in order. Accepts run-record files and bare
// scripts: one JSON object per line, turns taken from {"type":"exchange",...} lines.
class ScriptedProvider : public LLMProvider {
 public:
  explicit ScriptedProvider(std::vector<ScriptedTurn> turns, std::string name = "scripted");
  static std::unique_ptr<ScriptedProvider> from_file(const std::filesystem::path& path);
  static std::vector<ScriptedTurn> parse_script(const std::string& text);

  ChatReply send(const std::vector<ChatMessage>& history) override;
  std::string describe() const override { return name_; }
  std::size_t consumed() const;

 private:
  std::vector<ScriptedTurn> turns_;
  std::string name_;
  std::size_t next_ = 0;
  mutable std::mutex mu_;
};

// Rough usage estimate (4 characters per token) for turns without recorded usage.
TokenUsage estimate_usage(const std::vector<ChatMessage>& history, const std::string& reply);

}  // namespace compilot
