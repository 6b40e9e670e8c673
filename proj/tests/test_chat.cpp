#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

#include "rusnor/chat.hpp"
#include "rusnor/http_transport.hpp"

using namespace rusnor::agent;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rusnor-test-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ChatRequest request(std::string user = "Translate: Kjøper du fisk?") {
  return {"test-model", "You are a linguist.", std::move(user), 0.0, 256};
}

std::string completion(const std::string& text) {
  return nlohmann::json{{"id", "cmpl-1"},
                        {"model", "test-model"},
                        {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}},
                                      {"finish_reason", "stop"}}}},
                        {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 3}}}}
      .dump();
}

/// Local HTTP server running a scripted handler.
class FakeProvider {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&, int call)>;

  explicit FakeProvider(Handler h) : handler_(std::move(h)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      int call;
      {
        std::lock_guard lock(mu_);
        requests_.push_back(req);
        call = static_cast<int>(requests_.size());
      }
      handler_(req, res, call);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeProvider() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig endpoint(int timeout = 5) const {
    return {"http://127.0.0.1:" + std::to_string(port_) + "/v1", "test-model", timeout, "secret-key"};
  }
  std::size_t calls() {
    std::lock_guard lock(mu_);
    return requests_.size();
  }
  httplib::Request request(std::size_t i) {
    std::lock_guard lock(mu_);
    return requests_.at(i);
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
  std::vector<httplib::Request> requests_;
};

struct RecordingSleeper {
  std::shared_ptr<std::vector<std::chrono::milliseconds>> delays = std::make_shared<std::vector<std::chrono::milliseconds>>();
  Sleeper fn() {
    return [d = delays](std::chrono::milliseconds ms) { d->push_back(ms); };
  }
};

HttpChatBackend backend_for(FakeProvider& p, RecordingSleeper& s, int timeout = 5) {
  return HttpChatBackend(p.endpoint(timeout), std::make_shared<HttplibTransport>(p.endpoint().base_url), RetryPolicy{},
                         s.fn());
}

}  // namespace

TEST(CacheKey, StableAndSensitiveToEveryField) {
  const auto base = request();
  EXPECT_EQ(CacheKey::of(base), CacheKey::of(base));
  EXPECT_EQ(CacheKey::of(base).hex().size(), 64u);
  auto v = base;
  v.model = "other";
  EXPECT_NE(CacheKey::of(v), CacheKey::of(base));
  v = base;
  v.system += " ";
  EXPECT_NE(CacheKey::of(v), CacheKey::of(base));
  v = base;
  v.user = "x";
  EXPECT_NE(CacheKey::of(v), CacheKey::of(base));
  v = base;
  v.temperature = 0.5;
  EXPECT_NE(CacheKey::of(v), CacheKey::of(base));
  v = base;
  v.max_tokens = 1;
  EXPECT_NE(CacheKey::of(v), CacheKey::of(base));
  // Field boundaries are unambiguous.
  ChatRequest a{"ab", "c", "", 0, 1}, b{"a", "bc", "", 0, 1};
  EXPECT_NE(CacheKey::of(a), CacheKey::of(b));
}

TEST(CacheKey, KnownDigest) {
  // Digest computed independently with Python hashlib.
  const ChatRequest r{"m", "s", "u", 0.0, 1};
  EXPECT_EQ(canonical_bytes(r), R"(["m","s","u",0.0,1])");
  EXPECT_EQ(CacheKey::of(r).hex(), "63293822ac745f0d6fc64a1bf7b874aeda628ba6d67a18035e890ce432eeb634");
}

TEST(ResponseCache, StoreAndLoad) {
  TempDir dir;
  ResponseCache cache(dir.path);
  const auto key = CacheKey::of(request());
  EXPECT_FALSE(cache.load(key));
  ChatResponse r;
  r.text = "Tvoja fisk kupom?";
  r.metadata = {{"id", "x"}};
  cache.store(key, request(), r);
  const auto back = cache.load(key);
  ASSERT_TRUE(back);
  EXPECT_EQ(back->text, r.text);
  EXPECT_TRUE(back->cache_hit);
  EXPECT_EQ(back->metadata["id"], "x");
  for (const auto& f : fs::directory_iterator(dir.path)) {
    EXPECT_EQ(f.path().extension(), ".json");
    EXPECT_EQ(f.path().stem(), key.hex());
  }
}

TEST(ResponseCache, CorruptFileIsAMiss) {
  TempDir dir;
  ResponseCache cache(dir.path);
  const auto key = CacheKey::of(request());
  std::ofstream(cache.path_for(key)) << "{not json";
  EXPECT_FALSE(cache.load(key));
}

TEST(ChatClient, SecondIdenticalRequestHitsCache) {
  TempDir dir;
  auto mock = std::make_shared<MockBackend>([](const ChatRequest& r) { return "echo: " + r.user; });
  ChatClient client(mock, ResponseCache(dir.path));
  const auto first = client.complete(request());
  const auto second = client.complete(request());
  EXPECT_FALSE(first.cache_hit);
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(first.text, second.text);
  EXPECT_EQ(mock->calls(), 1u);
  EXPECT_EQ(client.cache_hits(), 1u);
  EXPECT_EQ(client.cache_misses(), 1u);
  // A fresh client over the same directory is warm.
  ChatClient again(mock, ResponseCache(dir.path));
  EXPECT_TRUE(again.complete(request()).cache_hit);
  EXPECT_EQ(mock->calls(), 1u);
}

TEST(ChatClient, NoCacheAlwaysCallsBackend) {
  auto mock = std::make_shared<MockBackend>([](const ChatRequest&) { return std::string("x"); });
  ChatClient client(mock);
  client.complete(request());
  client.complete(request());
  EXPECT_EQ(mock->calls(), 2u);
}

TEST(ChatClient, ConcurrentRequestsShareCache) {
  TempDir dir;
  auto mock = std::make_shared<MockBackend>([](const ChatRequest& r) { return r.user; });
  ChatClient client(mock, ResponseCache(dir.path));
  std::vector<std::jthread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&client, t] {
      for (int i = 0; i < 20; ++i) EXPECT_EQ(client.complete(request(std::to_string((i + t) % 10))).text, std::to_string((i + t) % 10));
    });
  }
  threads.clear();
  EXPECT_EQ(client.cache_hits() + client.cache_misses(), 80u);
  EXPECT_LE(std::distance(fs::directory_iterator(dir.path), fs::directory_iterator{}), 10);
}

TEST(MockBackend, Fixtures) {
  auto mock = MockBackend::from_fixtures({{"hello", "privet"}});
  EXPECT_EQ(mock->send(request("hello")).text, "privet");
  EXPECT_THROW(mock->send(request("bye")), ProviderError);
}

TEST(EndpointConfig, ParsesAndReadsKeyFromEnvironment) {
  ::setenv("LLM_API_KEY", "k-123", 1);
  const auto c = EndpointConfig::from_json(R"({"base_url": "https://api.example.com/v1", "model": "m1"})");
  EXPECT_EQ(c.base_url, "https://api.example.com/v1");
  EXPECT_EQ(c.model, "m1");
  EXPECT_EQ(c.timeout_seconds, 120);
  EXPECT_EQ(c.api_key, "k-123");
  ::unsetenv("LLM_API_KEY");
  EXPECT_THROW(EndpointConfig::from_json(R"({"model": "m1"})"), rusnor::ValidationError);
  EXPECT_THROW(EndpointConfig::from_json("{"), rusnor::ParseError);
}

TEST(BaseUrl, Parse) {
  auto u = BaseUrl::parse("https://api.example.com/v1/");
  EXPECT_EQ(u.scheme, "https");
  EXPECT_EQ(u.host, "api.example.com");
  EXPECT_EQ(u.port, 443);
  EXPECT_EQ(u.prefix, "/v1");
  u = BaseUrl::parse("http://localhost:8080");
  EXPECT_EQ(u.port, 8080);
  EXPECT_EQ(u.prefix, "");
  EXPECT_THROW(BaseUrl::parse("localhost:8080"), rusnor::InvalidArgument);
  EXPECT_THROW(BaseUrl::parse("ftp://x"), rusnor::InvalidArgument);
  EXPECT_THROW(BaseUrl::parse("http://x:port"), rusnor::InvalidArgument);
}

TEST(RetryPolicy, ExponentialCapped) {
  RetryPolicy p;
  EXPECT_EQ(p.delay_before(1).count(), 500);
  EXPECT_EQ(p.delay_before(2).count(), 1000);
  EXPECT_EQ(p.delay_before(3).count(), 2000);
  EXPECT_EQ(p.delay_before(10).count(), 8000);
}

TEST(HttpBackend, WireFormat) {
  FakeProvider p([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(completion("Tvoja fisk kupom?"), "application/json");
  });
  RecordingSleeper s;
  auto b = backend_for(p, s);
  const auto r = b.send(request());
  EXPECT_EQ(r.text, "Tvoja fisk kupom?");
  EXPECT_EQ(r.metadata["usage"]["completion_tokens"], 3);
  EXPECT_EQ(r.metadata["finish_reason"], "stop");
  ASSERT_EQ(p.calls(), 1u);
  const auto req = p.request(0);
  EXPECT_EQ(req.get_header_value("Authorization"), "Bearer secret-key");
  EXPECT_NE(req.get_header_value("Content-Type").find("application/json"), std::string::npos);
  const auto body = nlohmann::json::parse(req.body);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 256);
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["messages"][1]["content"], "Translate: Kjøper du fisk?");
  EXPECT_TRUE(s.delays->empty());
}

TEST(HttpBackend, RetriesTransientFailures) {
  FakeProvider p([](const httplib::Request&, httplib::Response& res, int call) {
    if (call == 1) {
      res.status = 503;
      res.set_content("overloaded", "text/plain");
    } else if (call == 2) {
      res.status = 429;
      res.set_content(R"({"error": {"message": "slow down"}})", "application/json");
    } else {
      res.set_content(completion("ok"), "application/json");
    }
  });
  RecordingSleeper s;
  auto b = backend_for(p, s);
  EXPECT_EQ(b.send(request()).text, "ok");
  EXPECT_EQ(p.calls(), 3u);
  ASSERT_EQ(s.delays->size(), 2u);
  EXPECT_EQ((*s.delays)[0].count(), 500);
  EXPECT_EQ((*s.delays)[1].count(), 1000);
}

TEST(HttpBackend, HonoursRetryAfter) {
  FakeProvider p([](const httplib::Request&, httplib::Response& res, int call) {
    if (call == 1) {
      res.status = 429;
      res.set_header("Retry-After", "2");
    } else {
      res.set_content(completion("ok"), "application/json");
    }
  });
  RecordingSleeper s;
  auto b = backend_for(p, s);
  EXPECT_EQ(b.send(request()).text, "ok");
  ASSERT_EQ(s.delays->size(), 1u);
  EXPECT_EQ((*s.delays)[0].count(), 2000);
}

TEST(HttpBackend, RateLimitExhaustion) {
  FakeProvider p([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 429;
    res.set_content(R"({"error": {"message": "quota"}})", "application/json");
  });
  RecordingSleeper s;
  auto b = backend_for(p, s);
  EXPECT_THROW(b.send(request()), RateLimitError);
  EXPECT_EQ(p.calls(), 3u);
  EXPECT_EQ(s.delays->size(), 2u);
}

TEST(HttpBackend, AuthenticationIsNotRetried) {
  FakeProvider p([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 401;
    res.set_content(R"({"error": {"message": "invalid key"}})", "application/json");
  });
  RecordingSleeper s;
  auto b = backend_for(p, s);
  try {
    b.send(request());
    FAIL();
  } catch (const AuthenticationError& e) {
    EXPECT_NE(std::string(e.what()).find("invalid key"), std::string::npos);
  }
  EXPECT_EQ(p.calls(), 1u);
}

TEST(HttpBackend, MissingKeyIsAuthenticationError) {
  EndpointConfig c{"http://127.0.0.1:9/v1", "m", 1, ""};
  HttpChatBackend b(c, std::make_shared<HttplibTransport>(c.base_url));
  EXPECT_THROW(b.send(request()), AuthenticationError);
}

TEST(HttpBackend, ProviderErrorCarriesMessage) {
  FakeProvider p([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 400;
    res.set_content(R"({"error": {"message": "maximum context length is 8192 tokens"}})", "application/json");
  });
  RecordingSleeper s;
  auto b = backend_for(p, s);
  try {
    b.send(request());
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.status(), 400);
    EXPECT_EQ(e.provider_message(), "maximum context length is 8192 tokens");
  }
  EXPECT_EQ(p.calls(), 1u);
}

TEST(HttpBackend, MalformedResponses) {
  for (const std::string body : {"not json", R"({"choices": []})", R"({"choices": [{"message": {}}]})",
                                 R"({"choices": [{"message": {"content": 5}}]})"}) {
    FakeProvider p([body](const httplib::Request&, httplib::Response& res, int) {
      res.set_content(body, "application/json");
    });
    RecordingSleeper s;
    auto b = backend_for(p, s);
    EXPECT_THROW(b.send(request()), MalformedResponseError) << body;
  }
}

TEST(HttpBackend, Timeout) {
  FakeProvider p([](const httplib::Request&, httplib::Response& res, int) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    res.set_content(completion("late"), "application/json");
  });
  RecordingSleeper s;
  HttpChatBackend b(p.endpoint(1), std::make_shared<HttplibTransport>(p.endpoint().base_url), RetryPolicy{2},
                    s.fn());
  EXPECT_THROW(b.send(request()), TimeoutError);
  EXPECT_EQ(s.delays->size(), 1u);
}

TEST(HttpBackend, ConnectionRefusedIsNetworkError) {
  // Bind then close a socket to obtain a port nobody serves.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof addr;
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), len), 0);
  ASSERT_EQ(::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len), 0);
  const int port = ntohs(addr.sin_port);
  ::close(fd);
  EndpointConfig c{"http://127.0.0.1:" + std::to_string(port), "m", 2, "k"};
  RecordingSleeper s;
  HttpChatBackend b(c, std::make_shared<HttplibTransport>(c.base_url), RetryPolicy{}, s.fn());
  EXPECT_THROW(b.send(request()), NetworkError);
  EXPECT_EQ(s.delays->size(), 2u);
}

TEST(Complete, EndToEndThroughCache) {
  FakeProvider p([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(completion("Moja njet forstå."), "application/json");
  });
  TempDir dir;
  const auto first = complete(request(), p.endpoint(), ResponseCache(dir.path));
  const auto second = complete(request(), p.endpoint(), ResponseCache(dir.path));
  EXPECT_EQ(first.text, "Moja njet forstå.");
  EXPECT_FALSE(first.cache_hit);
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(p.calls(), 1u);
}
