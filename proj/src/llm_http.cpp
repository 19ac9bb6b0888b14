#include <curl/curl.h>

#include <cstdlib>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "compilot/error.hpp"
#include "compilot/llm.hpp"

namespace compilot {

namespace {

std::once_flag g_curl_init;

std::size_t collect(char* data, std::size_t size, std::size_t n, void* user) {
  static_cast<std::string*>(user)->append(data, size * n);
  return size * n;
}

struct HttpResponse {
  long status = 0;
  std::string body;
};

class Attempt {
 public:
  Attempt() : curl_(curl_easy_init()) {
    if (!curl_) throw TransportError("curl initialization failed");
  }
  ~Attempt() {
    if (headers_) curl_slist_free_all(headers_);
    curl_easy_cleanup(curl_);
  }
  Attempt(const Attempt&) = delete;
  Attempt& operator=(const Attempt&) = delete;

  HttpResponse post(const std::string& url, const std::string& body, const std::string& key, int timeout_s) {
    headers_ = curl_slist_append(headers_, "Content-Type: application/json");
    if (!key.empty()) headers_ = curl_slist_append(headers_, ("Authorization: Bearer " + key).c_str());
    HttpResponse r;
    curl_easy_setopt(curl_, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl_, CURLOPT_HTTPHEADER, headers_);
    curl_easy_setopt(curl_, CURLOPT_POSTFIELDS, body.c_str());
    curl_easy_setopt(curl_, CURLOPT_POSTFIELDSIZE, static_cast<long>(body.size()));
    curl_easy_setopt(curl_, CURLOPT_WRITEFUNCTION, collect);
    curl_easy_setopt(curl_, CURLOPT_WRITEDATA, &r.body);
    curl_easy_setopt(curl_, CURLOPT_TIMEOUT, static_cast<long>(timeout_s));
    curl_easy_setopt(curl_, CURLOPT_NOSIGNAL, 1L);
    CURLcode rc = curl_easy_perform(curl_);
    if (rc != CURLE_OK) throw TransportError(fmt::format("request failed: {}", curl_easy_strerror(rc)));
    curl_easy_getinfo(curl_, CURLINFO_RESPONSE_CODE, &r.status);
    return r;
  }

 private:
  CURL* curl_;
  curl_slist* headers_ = nullptr;
};

bool retryable(long status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

}  // namespace

HttpProvider::HttpProvider(LLMProviderConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  std::call_once(g_curl_init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

std::string HttpProvider::describe() const { return fmt::format("http:{}@{}", cfg_.model, cfg_.endpoint); }

ChatReply HttpProvider::send(const std::vector<ChatMessage>& history) {
  check_history(history);
  std::string key;
  if (!cfg_.api_key_env.empty()) {
    if (const char* v = std::getenv(cfg_.api_key_env.c_str())) key = v;
  }
  std::string body = chat_request_body(history, cfg_);
  spdlog::debug("POST {} (Authorization: {}) {}", cfg_.endpoint, key.empty() ? "none" : "Bearer ***", redact(body, key));

  auto backoff = cfg_.retry.backoff;
  std::string last;
  for (int attempt = 0; attempt <= cfg_.retry.retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("provider attempt {} failed ({}); retrying in {} ms", attempt, last, backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    HttpResponse r;
    try {
      Attempt a;
      r = a.post(cfg_.endpoint, body, key, cfg_.timeout_s);
    } catch (const TransportError& e) {
      last = redact(e.what(), key);
      continue;
    }
    spdlog::debug("provider status {} body {}", r.status, redact(r.body, key));
    if (r.status >= 200 && r.status < 300) return parse_chat_response(r.body);
    last = fmt::format("HTTP status {}: {}", r.status, redact(r.body.substr(0, 500), key));
    if (!retryable(r.status)) break;
  }
  throw TransportError("provider request failed: " + last);
}

}  // namespace compilot
