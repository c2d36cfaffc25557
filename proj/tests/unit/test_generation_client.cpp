#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <set>
#include <string>
#include <vector>

#include "mock_endpoint.hpp"
#include "polypersona/generation_client.hpp"
#include "support/fixtures.hpp"

using namespace polypersona;
using nlohmann::json;

namespace {

std::vector<ChatRecord> records(std::size_t n) {
    const auto bank = fixtures::uniform_bank(3);
    const auto store = fixtures::sample_store(n);
    std::vector<ChatRecord> out;
    const auto all = bank.all();
    for (std::size_t i = 0; i < n; ++i) out.push_back(build_record(store.cards()[i], all[i % all.size()], std::nullopt, i));
    return out;
}

EndpointConfig config(const mock::MockEndpoint& m) {
    EndpointConfig cfg;
    cfg.base_url = m.base_url();
    cfg.model_name = "mock-model";
    cfg.backoff_base = std::chrono::milliseconds(1);
    cfg.backoff_cap = std::chrono::milliseconds(5);
    cfg.request_timeout_s = 5.0;
    return cfg;
}

std::string user_of(const json& body) {
    for (const auto& m : body["messages"])
        if (m["role"] == "user") return m["content"];
    return {};
}

// Replies with a fixed text instead of the survey-style answer.
class EchoServer {
public:
    explicit EchoServer(std::string text) {
        server_.Post("/v1/chat/completions", [text](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump(),
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~EchoServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST_CASE("generate: echo endpoint returns its text on the first attempt", "[client]") {
    EchoServer echo("OK");
    EndpointConfig cfg;
    cfg.base_url = echo.url();
    cfg.model_name = "m";
    const auto r = generate(records(1)[0], cfg);
    CHECK(r.text == "OK");
    CHECK(r.attempt_count == 1);
    CHECK_FALSE(r.cached);
    CHECK(r.ok());
}

TEST_CASE("generate: two failures then success counts three attempts", "[client]") {
    mock::MockEndpoint m([](std::size_t i, const json&) -> std::optional<int> {
        if (i == 0) return 503;
        if (i == 1) return 429;
        return std::nullopt;
    });
    m.start();
    auto cfg = config(m);
    cfg.max_retries = 3;
    const auto r = generate(records(1)[0], cfg);
    CHECK(r.attempt_count == 3);
    CHECK_FALSE(r.text.empty());
    CHECK(m.requests() == 3);
}

TEST_CASE("generate: retries exhausted", "[client]") {
    mock::MockEndpoint m([](std::size_t, const json&) -> std::optional<int> { return 500; });
    m.start();
    auto cfg = config(m);
    cfg.max_retries = 2;
    CHECK_THROWS_AS(generate(records(1)[0], cfg), EndpointError);
    CHECK(m.requests() == 3);
}

TEST_CASE("generate: 401 is an AuthError without retries", "[client]") {
    mock::MockEndpoint m([](std::size_t, const json&) -> std::optional<int> { return 401; });
    m.start();
    auto cfg = config(m);
    cfg.max_retries = 3;
    CHECK_THROWS_AS(generate(records(1)[0], cfg), AuthError);
    CHECK(m.requests() == 1);
}

TEST_CASE("generate: other 4xx is terminal", "[client]") {
    mock::MockEndpoint m([](std::size_t, const json&) -> std::optional<int> { return 404; });
    m.start();
    CHECK_THROWS_AS(generate(records(1)[0], config(m)), EndpointError);
    CHECK(m.requests() == 1);
}

TEST_CASE("generate: unreachable endpoint exhausts on timeouts", "[client]") {
    // Bind then release a port so nothing listens there.
    int port = 0;
    {
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.model_name = "m";
    cfg.max_retries = 1;
    cfg.request_timeout_s = 1.0;
    cfg.backoff_base = std::chrono::milliseconds(1);
    CHECK_THROWS_AS(generate(records(1)[0], cfg), TimeoutExhaustedError);
}

TEST_CASE("generate: wire body carries model, system and user turns", "[client]") {
    mock::MockEndpoint m;
    m.start();
    auto cfg = config(m);
    cfg.temperature = 0.25;
    cfg.max_tokens = 99;
    auto rec = records(1)[0];
    rec.messages[2].content = "reference answer that must not leak";
    generate(rec, cfg);
    const auto bodies = m.bodies();
    REQUIRE(bodies.size() == 1);
    const auto& b = bodies[0];
    CHECK(b["model"] == "mock-model");
    CHECK(b["temperature"] == 0.25);
    CHECK(b["max_tokens"] == 99);
    REQUIRE(b["messages"].size() == 2);
    CHECK(b["messages"][0]["role"] == "system");
    CHECK(b["messages"][1]["content"] == rec.user());
    CHECK(b.dump().find("must not leak") == std::string::npos);
}

TEST_CASE("generate_batch: peak in-flight stays within the bound, order preserved", "[client]") {
    mock::MockEndpoint m({}, std::chrono::milliseconds(40));
    m.start();
    auto cfg = config(m);
    cfg.max_in_flight = 3;
    const auto recs = records(10);
    const auto results = generate_batch(recs, cfg);
    REQUIRE(results.size() == 10);
    CHECK(m.peak_in_flight() <= 3);
    CHECK(m.peak_in_flight() >= 2);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(results[i].record_id == recs[i].id);
        CHECK(results[i].text == mock::respond("mock-model", recs[i].user()));
    }
}

TEST_CASE("generate_batch: second run with cache makes no network calls", "[client]") {
    mock::MockEndpoint m;
    m.start();
    fixtures::TempDir dir("cache");
    const ResponseCache cache(dir.path());
    const auto cfg = config(m);
    const auto recs = records(10);
    const auto first = generate_batch(recs, cfg, &cache);
    CHECK(m.requests() == 10);
    m.reset_counters();
    const auto second = generate_batch(recs, cfg, &cache);
    CHECK(m.requests() == 0);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(second[i].cached);
        CHECK(second[i].text == first[i].text);
    }
    // A different temperature is a different key.
    auto hotter = cfg;
    hotter.temperature = 1.0;
    generate_batch(std::span<const ChatRecord>(recs).first(1), hotter, &cache);
    CHECK(m.requests() == 1);
}

TEST_CASE("generate_batch: one failing record among ten", "[client]") {
    const auto recs = records(10);
    const std::string bad_user = recs[6].user();
    mock::MockEndpoint m([bad_user](std::size_t, const json& body) -> std::optional<int> {
        if (user_of(body) == bad_user) return 400;
        return std::nullopt;
    });
    m.start();
    const auto results = generate_batch(recs, config(m));
    REQUIRE(results.size() == 10);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(results[i].record_id == recs[i].id);
        if (results[i].ok()) ++ok;
    }
    CHECK(ok == 9);
    CHECK_FALSE(results[6].ok());
    CHECK(results[6].text.empty());
    CHECK(results[6].attempt_count == 1);
}

TEST_CASE("response cache: stores under the key and checks it on read", "[client]") {
    fixtures::TempDir dir("cache");
    const ResponseCache cache(dir.path());
    const ResponseCache::Key k{"m", "prompt", 0.7, 256};
    CHECK_FALSE(cache.get(k).has_value());
    cache.put(k, "stored text");
    CHECK(cache.get(k) == std::optional<std::string>("stored text"));
    CHECK_FALSE(cache.get({"m", "prompt", 0.7, 255}).has_value());
    CHECK_FALSE(cache.get({"m2", "prompt", 0.7, 256}).has_value());
}

TEST_CASE("generation line format round-trips", "[client]") {
    GenerationResult r{"rec-1", "m", "hello", 12, 2, false, std::nullopt};
    const auto back = generation_from_json(json::parse(to_json(r).dump()));
    CHECK(back.record_id == "rec-1");
    CHECK(back.text == "hello");
    CHECK(back.attempt_count == 2);
    const auto minimal = generation_from_json(json{{"record_id", "x"}, {"model", "m"}, {"text", "t"}});
    CHECK(minimal.ok());
    CHECK(minimal.text == "t");
}

TEST_CASE("endpoint config validation", "[client]") {
    EndpointConfig cfg;
    cfg.base_url = "http://x";
    cfg.model_name = "m";
    CHECK_NOTHROW(cfg.validate());
    cfg.max_in_flight = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.max_in_flight = 1;
    cfg.temperature = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("backoff delay is full jitter below the capped exponential", "[client]") {
    EndpointConfig cfg;
    Rng rng(1);
    for (int retry = 0; retry < 12; ++retry) {
        const auto cap = std::min<long long>(30000, 500LL << retry);
        for (int i = 0; i < 50; ++i) {
            const auto d = detail::backoff_delay(cfg, retry, rng).count();
            CHECK(d >= 0);
            CHECK(d <= cap);
        }
    }
}
