#pragma once

// HttpTransport over cpp-httplib. Accepts http:// and https:// base URLs
// with an optional path prefix, e.g. https://api.example.com/v1.

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "httplib.h"
#include "rusnor/chat.hpp"

namespace rusnor::agent {

struct BaseUrl {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string prefix;  ///< no trailing slash

  static BaseUrl parse(std::string_view url) {
    BaseUrl u;
    const auto sep = url.find("://");
    if (sep == std::string_view::npos) throw InvalidArgument("base URL needs a scheme: " + std::string(url));
    u.scheme = std::string(url.substr(0, sep));
    if (u.scheme != "http" && u.scheme != "https") throw InvalidArgument("unsupported scheme '" + u.scheme + "'");
    const auto slash = url.find('/', sep + 3);
    auto authority = url.substr(sep + 3, slash == std::string_view::npos ? std::string_view::npos : slash - sep - 3);
    if (slash != std::string_view::npos) u.prefix = std::string(url.substr(slash));
    while (u.prefix.ends_with('/')) u.prefix.pop_back();

    u.port = u.scheme == "https" ? 443 : 80;
    if (const auto colon = authority.rfind(':'); colon != std::string_view::npos && authority.back() != ']') {
      const auto digits = authority.substr(colon + 1);
      try {
        std::size_t used = 0;
        u.port = std::stoi(std::string(digits), &used);
        if (used != digits.size() || u.port <= 0 || u.port > 65535) throw std::out_of_range("port");
      } catch (const std::exception&) {
        throw InvalidArgument("bad port in base URL: " + std::string(url));
      }
      authority = authority.substr(0, colon);
    }
    if (authority.empty()) throw InvalidArgument("base URL has no host: " + std::string(url));
    u.host = std::string(authority);
    return u;
  }
};

class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(std::string_view base_url) : url_(BaseUrl::parse(base_url)) {}

  HttpResponse post_json(const std::string& path, const std::string& body,
                         const std::map<std::string, std::string>& headers,
                         std::chrono::seconds timeout) override {
    httplib::Client client(url_.scheme + "://" + url_.host + ":" + std::to_string(url_.port));
    client.set_connection_timeout(std::chrono::seconds(std::min<long long>(timeout.count(), 30)));
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        h.emplace(k, v);
      }
    }
    auto result = client.Post(url_.prefix + path, h, body, content_type);
    if (!result) {
      const auto err = result.error();
      const auto what = "POST " + url_.host + url_.prefix + path + ": " + httplib::to_string(err);
      if (err == httplib::Error::Read || err == httplib::Error::Write) {
        // httplib reports an expired socket timeout as a read/write failure.
        throw TimeoutError(what);
      }
      if (err == httplib::Error::ConnectionTimeout) throw TimeoutError(what);
      throw NetworkError(what);
    }
    HttpResponse r;
    r.status = result->status;
    r.body = result->body;
    for (const auto& [k, v] : result->headers) r.headers.emplace(k, v);
    return r;
  }

 private:
  BaseUrl url_;
};

/// Chat backend talking to the configured endpoint over HTTP(S).
inline std::shared_ptr<ChatBackend> make_http_backend(const EndpointConfig& endpoint, RetryPolicy retry = {}) {
  return std::make_shared<HttpChatBackend>(endpoint, std::make_shared<HttplibTransport>(endpoint.base_url), retry);
}

/// One request through the cache and then the endpoint.
inline ChatResponse complete(const ChatRequest& request, const EndpointConfig& endpoint,
                             std::optional<ResponseCache> cache = std::nullopt) {
  ChatClient client(make_http_backend(endpoint), std::move(cache));
  return client.complete(request);
}

}  // namespace rusnor::agent
