#pragma once

// Provider-agnostic chat-completion client with a content-addressed response
// cache, retry with exponential backoff, and an offline mock backend.

#include <openssl/evp.h>

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include "json.hpp"
#include "rusnor/error.hpp"

namespace rusnor::agent {

// ---------------------------------------------------------------------------
// Errors

class ChatError : public Error {
 public:
  using Error::Error;
};

/// Credential rejected (HTTP 401/403) or missing.
class AuthenticationError : public ChatError {
 public:
  using ChatError::ChatError;
};

/// Still rate limited (HTTP 429) after the last retry.
class RateLimitError : public ChatError {
 public:
  using ChatError::ChatError;
};

/// The provider answered, but not with a chat-completion document.
class MalformedResponseError : public ChatError {
 public:
  using ChatError::ChatError;
};

class TimeoutError : public ChatError {
 public:
  using ChatError::ChatError;
};

/// Connection-level failure (DNS, refused, reset).
class NetworkError : public ChatError {
 public:
  using ChatError::ChatError;
};

/// The provider rejected the request; carries its status and message.
class ProviderError : public ChatError {
 public:
  ProviderError(int status, std::string message)
      : ChatError("provider error " + std::to_string(status) + ": " + message),
        status_(status),
        message_(std::move(message)) {}
  int status() const noexcept { return status_; }
  const std::string& provider_message() const noexcept { return message_; }

 private:
  int status_;
  std::string message_;
};

// ---------------------------------------------------------------------------
// Requests, responses and cache keys

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.0;
  int max_tokens = 4096;
  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct ChatResponse {
  std::string text;
  nlohmann::json metadata = nlohmann::json::object();
  bool cache_hit = false;
};

/// Byte-stable serialization of the keyed request fields.
inline std::string canonical_bytes(const ChatRequest& r) {
  return nlohmann::json::array({r.model, r.system, r.user, r.temperature, r.max_tokens}).dump();
}

/// SHA-256 of the canonical request bytes.
struct CacheKey {
  std::array<std::uint8_t, 32> digest{};

  static CacheKey of(const ChatRequest& request) {
    const auto bytes = canonical_bytes(request);
    CacheKey key;
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), key.digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != key.digest.size()) {
      throw Error("SHA-256 digest failed");
    }
    return key;
  }

  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : digest) {
      out.push_back(kDigits[b >> 4]);
      out.push_back(kDigits[b & 0xF]);
    }
    return out;
  }

  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

/// Directory of `<sha256>.json` files. Writes go to a temporary file in the
/// same directory and are renamed into place.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& directory() const noexcept { return dir_; }

  std::filesystem::path path_for(const CacheKey& key) const { return dir_ / (key.hex() + ".json"); }

  /// Cached response, or nullopt on a miss or an unreadable entry.
  std::optional<ChatResponse> load(const CacheKey& key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    try {
      const auto doc = nlohmann::json::parse(in);
      ChatResponse r;
      r.text = doc.at("response").at("text").get<std::string>();
      r.metadata = doc.at("response").value("metadata", nlohmann::json::object());
      r.cache_hit = true;
      return r;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
  }

  void store(const CacheKey& key, const ChatRequest& request, const ChatResponse& response) const {
    nlohmann::ordered_json doc;
    doc["key"] = key.hex();
    doc["request"] = {{"model", request.model},
                      {"system", request.system},
                      {"user", request.user},
                      {"temperature", request.temperature},
                      {"max_tokens", request.max_tokens}};
    doc["response"] = {{"text", response.text}, {"metadata", response.metadata}};

    const auto target = path_for(key);
    auto tmp = target;
    tmp += ".tmp-" + unique_suffix();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write cache file " + tmp.string());
      out << doc.dump(2) << '\n';
      if (!out.flush()) throw Error("cannot write cache file " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      throw Error("cannot move cache file into place: " + target.string());
    }
  }

 private:
  static std::string unique_suffix() {
    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream os;
    os << std::hex << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '-'
       << counter.fetch_add(1);
    return os.str();
  }

  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Endpoint and transport

struct EndpointConfig {
  std::string base_url;  ///< e.g. https://api.openai.com/v1
  std::string model;
  int timeout_seconds = 120;
  std::string api_key;

  /// Parses {base_url, model, timeout_seconds}; the key comes from LLM_API_KEY.
  static EndpointConfig from_json(std::string_view document) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), e.byte);
    }
    EndpointConfig c;
    try {
      c.base_url = j.at("base_url").get<std::string>();
      c.model = j.at("model").get<std::string>();
      c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(0, "endpoint", e.what());
    }
    if (const char* key = std::getenv("LLM_API_KEY")) c.api_key = key;
    return c;
  }
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;
};

/// POSTs JSON bodies. Implementations throw TimeoutError or NetworkError for
/// transport failures and return every HTTP status as a response.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& path, const std::string& body,
                                 const std::map<std::string, std::string>& headers,
                                 std::chrono::seconds timeout) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  std::chrono::milliseconds delay_before(int retry) const {
    double ms = static_cast<double>(initial_delay.count());
    for (int i = 1; i < retry; ++i) ms *= multiplier;
    ms = std::min(ms, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
  }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void sleep_for(std::chrono::milliseconds d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

// ---------------------------------------------------------------------------
// Backends

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

namespace detail {

inline std::string provider_message(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    if (j.contains("error")) {
      const auto& e = j["error"];
      if (e.is_string()) return e.get<std::string>();
      if (e.is_object() && e.contains("message") && e["message"].is_string()) {
        return e["message"].get<std::string>();
      }
    }
    if (j.contains("message") && j["message"].is_string()) return j["message"].get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return body.substr(0, 500);
}

inline std::optional<std::chrono::milliseconds> retry_after(const HttpResponse& r) {
  for (const auto& [name, value] : r.headers) {
    std::string lower = name;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower != "retry-after") continue;
    char* end = nullptr;
    const double seconds = std::strtod(value.c_str(), &end);
    if (end != value.c_str() && seconds >= 0) {
      return std::chrono::milliseconds(static_cast<std::int64_t>(std::min(seconds, 60.0) * 1000));
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Speaks the chat-completions JSON shape: a `messages` array of
/// {role, content} in the request and `choices[0].message.content` back.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(EndpointConfig endpoint, std::shared_ptr<HttpTransport> transport,
                  RetryPolicy retry = {}, Sleeper sleeper = sleep_for)
      : endpoint_(std::move(endpoint)),
        transport_(std::move(transport)),
        retry_(retry),
        sleeper_(std::move(sleeper)) {}

  static std::string request_body(const ChatRequest& r) {
    nlohmann::ordered_json body;
    body["model"] = r.model;
    body["messages"] = nlohmann::ordered_json::array();
    if (!r.system.empty()) body["messages"].push_back({{"role", "system"}, {"content", r.system}});
    body["messages"].push_back({{"role", "user"}, {"content", r.user}});
    body["temperature"] = r.temperature;
    body["max_tokens"] = r.max_tokens;
    return body.dump();
  }

  static ChatResponse parse_response(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedResponseError(std::string("response is not JSON: ") + e.what());
    }
    const auto* content = [&]() -> const nlohmann::json* {
      if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        return nullptr;
      }
      const auto& choice = j["choices"][0];
      if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) return nullptr;
      const auto& message = choice["message"];
      if (!message.contains("content") || !message["content"].is_string()) return nullptr;
      return &message["content"];
    }();
    if (content == nullptr) throw MalformedResponseError("response has no choices[0].message.content");

    ChatResponse r;
    r.text = content->get<std::string>();
    for (const char* key : {"id", "model", "usage", "created", "system_fingerprint"}) {
      if (j.contains(key)) r.metadata[key] = j[key];
    }
    if (j["choices"][0].contains("finish_reason")) r.metadata["finish_reason"] = j["choices"][0]["finish_reason"];
    return r;
  }

  ChatResponse send(const ChatRequest& request) override {
    if (endpoint_.api_key.empty()) throw AuthenticationError("no API key configured (set LLM_API_KEY)");
    const std::map<std::string, std::string> headers = {
        {"Authorization", "Bearer " + endpoint_.api_key}, {"Content-Type", "application/json"}};
    const auto body = request_body(request);
    const auto timeout = std::chrono::seconds(endpoint_.timeout_seconds);

    for (int attempt = 1;; ++attempt) {
      const bool last = attempt >= retry_.max_attempts;
      std::optional<std::chrono::milliseconds> wait;
      try {
        const auto response = transport_->post_json("/chat/completions", body, headers, timeout);
        if (response.status >= 200 && response.status < 300) return parse_response(response.body);
        const auto message = detail::provider_message(response.body);
        if (response.status == 401 || response.status == 403) throw AuthenticationError(message);
        const bool transient = response.status == 429 || response.status == 408 || response.status >= 500;
        if (!transient) throw ProviderError(response.status, message);
        if (last) {
          if (response.status == 429) throw RateLimitError("rate limited after " + std::to_string(attempt) + " attempts: " + message);
          throw ProviderError(response.status, message);
        }
        wait = detail::retry_after(response);
      } catch (const TimeoutError&) {
        if (last) throw;
      } catch (const NetworkError&) {
        if (last) throw;
      }
      sleeper_(wait.value_or(retry_.delay_before(attempt)));
    }
  }

 private:
  EndpointConfig endpoint_;
  std::shared_ptr<HttpTransport> transport_;
  RetryPolicy retry_;
  Sleeper sleeper_;
};

/// Offline backend answering from a function of the request.
class MockBackend : public ChatBackend {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;

  explicit MockBackend(Responder responder) : responder_(std::move(responder)) {}

  /// Answers with the fixture whose key equals the request's user text.
  static std::shared_ptr<MockBackend> from_fixtures(std::map<std::string, std::string> fixtures) {
    return std::make_shared<MockBackend>([fixtures = std::move(fixtures)](const ChatRequest& r) {
      const auto it = fixtures.find(r.user);
      if (it == fixtures.end()) throw ProviderError(404, "no fixture for this prompt");
      return it->second;
    });
  }

  ChatResponse send(const ChatRequest& request) override {
    ++calls_;
    ChatResponse r;
    r.text = responder_(request);
    r.metadata["backend"] = "mock";
    return r;
  }

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  Responder responder_;
  std::atomic<std::size_t> calls_{0};
};

/// Cache-aware front end over a backend. Safe to call from several threads
/// when the backend is.
class ChatClient {
 public:
  explicit ChatClient(std::shared_ptr<ChatBackend> backend,
                      std::optional<ResponseCache> cache = std::nullopt)
      : backend_(std::move(backend)), cache_(std::move(cache)) {}

  ChatResponse complete(const ChatRequest& request) {
    std::optional<CacheKey> key;
    if (cache_) {
      key = CacheKey::of(request);
      if (auto hit = cache_->load(*key)) {
        ++hits_;
        return *hit;
      }
    }
    ++misses_;
    auto response = backend_->send(request);
    response.cache_hit = false;
    if (cache_) cache_->store(*key, request, response);
    return response;
  }

  std::size_t cache_hits() const noexcept { return hits_.load(); }
  std::size_t cache_misses() const noexcept { return misses_.load(); }
  bool has_cache() const noexcept { return cache_.has_value(); }

 private:
  std::shared_ptr<ChatBackend> backend_;
  std::optional<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace rusnor::agent
