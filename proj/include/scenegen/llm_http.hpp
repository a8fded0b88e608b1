#pragma once

// Chat-completions client over HTTP(S). Define CPPHTTPLIB_OPENSSL_SUPPORT and
// link OpenSSL before including this header to reach https endpoints.

#include <chrono>
#include <cstdlib>
#include <memory>
#include <regex>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "scenegen/error.hpp"
#include "scenegen/llm.hpp"

namespace scenegen {

struct HttpLlmConfig {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string token;
  std::string model = "gpt-4o-mini";
  int timeout_seconds = 60;
  int max_attempts = 3;  // transport-level retries, independent of schema retries
  int backoff_ms = 500;

  /// SCENEGEN_LLM_ENDPOINT, SCENEGEN_LLM_TOKEN, SCENEGEN_LLM_MODEL.
  static HttpLlmConfig from_env() {
    HttpLlmConfig c;
    if (const char* e = std::getenv("SCENEGEN_LLM_ENDPOINT")) c.endpoint = e;
    if (const char* t = std::getenv("SCENEGEN_LLM_TOKEN")) c.token = t;
    if (const char* m = std::getenv("SCENEGEN_LLM_MODEL")) c.model = m;
    if (c.endpoint.empty()) throw InvalidArgument("SCENEGEN_LLM_ENDPOINT is not set");
    return c;
  }
};

inline std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (std::size_t pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos))
    text.replace(pos, secret.size(), "***");
  return text;
}

/// Stateless per request: each send() opens its own connection, so one
/// instance may be shared across threads.
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmConfig cfg) : cfg_(std::move(cfg)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, url)) throw InvalidArgument("malformed LLM endpoint URL: " + cfg_.endpoint);
    base_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : "/";
  }

  std::string send(const std::string& prompt, const nlohmann::json& schema) override {
    const nlohmann::json body = {
        {"model", cfg_.model},
        {"temperature", 0},
        {"response_format", {{"type", "json_object"}}},
        {"messages",
         {{{"role", "system"},
           {"content", "Translate the floor plan request into JSON matching this schema. Reply with JSON only.\n" +
                           schema.dump()}},
          {{"role", "user"}, {"content", prompt}}}}};
    const std::string payload = body.dump();
    spdlog::debug("llm request {} {}", redact(cfg_.endpoint, cfg_.token), redact(payload, cfg_.token));

    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
      httplib::Client cli(base_);
      cli.set_connection_timeout(cfg_.timeout_seconds);
      cli.set_read_timeout(cfg_.timeout_seconds);
      httplib::Headers headers;
      if (!cfg_.token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.token);
      auto res = cli.Post(path_, headers, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
      } else {
        spdlog::debug("llm response {} {}", res->status, redact(res->body, cfg_.token));
        if (res->status == 200) return extract_content(res->body);
        last_error = "HTTP " + std::to_string(res->status);
        if (res->status < 500 && res->status != 429) break;
      }
      if (attempt < cfg_.max_attempts)
        std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms * attempt));
    }
    throw TransportError("LLM request failed: " + last_error);
  }

 private:
  static std::string extract_content(const std::string& body) {
    try {
      return nlohmann::json::parse(body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      // Not a chat-completions envelope; let the schema check see the raw body.
      return body;
    }
  }

  HttpLlmConfig cfg_;
  std::string base_;
  std::string path_;
};

}  // namespace scenegen
