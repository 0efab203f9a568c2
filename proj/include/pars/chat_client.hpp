#pragma once

// Chat-completion client over cpp-httplib: bounded concurrency, per-request
// timeouts and exponential backoff on transient failures (transport errors,
// HTTP 429 and 5xx).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "pars/error.hpp"

namespace pars::chat {

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string path = "/v1/chat/completions";
  std::string model_id = "teacher";
  std::string api_key_env = "PARS_API_KEY";
  std::string fallback_key_env;  // consulted when api_key_env is unset
  std::string system_prompt;
  double default_temperature = 0.0;  // used by callers without their own schedule
  double timeout_s = 120.0;
  int max_attempts = 3;
  int backoff_initial_ms = 500;
  double backoff_multiplier = 2.0;
  int backoff_max_ms = 8000;
  int max_concurrency = 8;
  int max_output_tokens = 4096;
  double chars_per_token = 4.0;
};

struct Message {
  std::string role;
  std::string content;
};

struct ChatResponse {
  std::string content;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  int attempts = 1;
};

inline std::string resolve_api_key(const EndpointConfig& cfg) {
  for (const std::string* name : {&cfg.api_key_env, &cfg.fallback_key_env}) {
    if (name->empty()) continue;
    if (const char* v = std::getenv(name->c_str()); v != nullptr && *v != '\0') return v;
  }
  return {};
}

inline nlohmann::json request_body(const EndpointConfig& cfg, const std::vector<Message>& messages,
                                   double temperature, int max_tokens) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", cfg.model_id},
          {"messages", std::move(msgs)},
          {"temperature", temperature},
          {"max_tokens", max_tokens}};
}

inline ChatResponse parse_response(const std::string& body, ErrorCode malformed = ErrorCode::ResponseMalformed) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(malformed, "response body is not a JSON object");
  ChatResponse out;
  try {
    out.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(malformed, "response lacks choices[0].message.content");
  }
  if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
    if (auto p = u->find("prompt_tokens"); p != u->end() && p->is_number_integer()) {
      out.prompt_tokens = p->get<std::int64_t>();
    }
    if (auto c = u->find("completion_tokens"); c != u->end() && c->is_number_integer()) {
      out.completion_tokens = c->get<std::int64_t>();
    }
  }
  return out;
}

class ChatClient {
 public:
  explicit ChatClient(EndpointConfig cfg, ErrorCode unavailable = ErrorCode::TeacherUnavailable)
      : cfg_(std::move(cfg)),
        unavailable_(unavailable),
        slots_(std::make_unique<std::counting_semaphore<1024>>(std::clamp(cfg_.max_concurrency, 1, 1024))),
        api_key_(resolve_api_key(cfg_)) {}

  const EndpointConfig& config() const { return cfg_; }

  ChatResponse complete(const std::vector<Message>& messages, double temperature, int max_tokens) {
    const std::string body = request_body(cfg_, messages, temperature, max_tokens).dump();
    Slot slot(*slots_);

    std::string last_error;
    double delay_ms = cfg_.backoff_initial_ms;
    const int attempts = std::max(1, cfg_.max_attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
        delay_ms = std::min<double>(delay_ms * cfg_.backoff_multiplier, cfg_.backoff_max_ms);
      }
      httplib::Client client(cfg_.base_url);
      const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::duration<double>(cfg_.timeout_s));
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

      auto res = client.Post(cfg_.path, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) {
        throw Error(ErrorCode::AuthFailure, "endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::ResponseMalformed, "unexpected HTTP " + std::to_string(res->status));
      }
      ChatResponse out = parse_response(res->body);
      out.attempts = attempt;
      return out;
    }
    throw Error(unavailable_, "endpoint " + cfg_.base_url + cfg_.path + " failed after " +
                                  std::to_string(attempts) + " attempts (" + last_error + ")");
  }

 private:
  struct Slot {
    explicit Slot(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
    ~Slot() { sem.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;
    std::counting_semaphore<1024>& sem;
  };

  EndpointConfig cfg_;
  ErrorCode unavailable_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
  std::string api_key_;
};

}  // namespace pars::chat
