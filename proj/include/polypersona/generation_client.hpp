#pragma once

// Chat-completion client: fills assistant turns by calling an
// OpenAI-compatible endpoint, with retries, a bounded worker pool and an
// on-disk content-addressed response cache.
//
// Generations line:
//   {"record_id", "model", "text", "latency_ms", "attempt_count", "cached", "error"?}

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "polypersona/dataset.hpp"
#include "polypersona/errors.hpp"
#include "polypersona/hash.hpp"
#include "polypersona/random.hpp"

namespace polypersona {

inline constexpr const char* kApiKeyEnv = "POLYPERSONA_API_KEY";

inline std::string api_key_from_env() {
    const char* v = std::getenv(kApiKeyEnv);
    return v ? std::string(v) : std::string{};
}

struct EndpointConfig {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string model_name;
    std::string api_key;
    int max_tokens = 256;
    double temperature = 0.7;
    double request_timeout_s = 60.0;
    int max_retries = 3;
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::milliseconds backoff_cap{30000};
    std::uint64_t seed = 0;  // jitter stream

    void validate() const {
        if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
        if (model_name.empty()) throw ConfigError("endpoint model_name is empty");
        if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
        if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
        if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
        if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
        if (!(request_timeout_s > 0.0)) throw ConfigError("request_timeout must be > 0");
    }
};

struct GenerationResult {
    std::string record_id;
    std::string model_name;
    std::string text;
    std::int64_t latency_ms = 0;
    int attempt_count = 0;
    bool cached = false;
    std::optional<std::string> error;

    bool ok() const { return !error.has_value(); }
};

inline nlohmann::ordered_json to_json(const GenerationResult& r) {
    nlohmann::ordered_json j;
    j["record_id"] = r.record_id;
    j["model"] = r.model_name;
    j["text"] = r.text;
    j["latency_ms"] = r.latency_ms;
    j["attempt_count"] = r.attempt_count;
    j["cached"] = r.cached;
    if (r.error) j["error"] = *r.error;
    return j;
}

// Accepts the full line or the minimal {"record_id", "model", "text"}.
inline GenerationResult generation_from_json(const nlohmann::json& j) {
    for (const char* key : {"record_id", "model", "text"})
        if (!j.is_object() || !j.contains(key) || !j[key].is_string())
            throw SchemaError(std::string("generation line missing string field '") + key + "'");
    GenerationResult r;
    r.record_id = j["record_id"].get<std::string>();
    r.model_name = j["model"].get<std::string>();
    r.text = j["text"].get<std::string>();
    r.latency_ms = j.value("latency_ms", std::int64_t{0});
    r.attempt_count = j.value("attempt_count", 1);
    r.cached = j.value("cached", false);
    if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
    return r;
}

inline std::vector<GenerationResult> read_generations(const std::filesystem::path& path) {
    std::vector<GenerationResult> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        try {
            out.push_back(generation_from_json(j));
        } catch (const SchemaError& e) {
            throw ParseError(path.string() + ": " + e.what(), line);
        }
    });
    return out;
}

// Content-addressed store under `dir`: dir/ab/<sha256>.json. Entries carry
// their full key so a lookup only hits when every key field matches.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
    }

    struct Key {
        std::string model;
        std::string input_text;
        double temperature = 0.0;
        int max_tokens = 0;
    };

    static nlohmann::ordered_json key_json(const Key& k) {
        return {{"model", k.model},
                {"input_text", k.input_text},
                {"temperature", k.temperature},
                {"max_tokens", k.max_tokens}};
    }

    static std::string digest(const Key& k) { return sha256_hex(key_json(k).dump()); }

    std::filesystem::path path_for(const Key& k) const {
        const std::string h = digest(k);
        return dir_ / h.substr(0, 2) / (h + ".json");
    }

    std::optional<std::string> get(const Key& k) const {
        const auto p = path_for(k);
        std::ifstream in(p, std::ios::binary);
        if (!in) return std::nullopt;
        try {
            const auto j = nlohmann::json::parse(in);
            if (j.at("key") != nlohmann::json(key_json(k))) return std::nullopt;
            return j.at("text").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            return std::nullopt;  // torn or foreign file: treat as a miss
        }
    }

    void put(const Key& k, const std::string& text) const {
        const auto p = path_for(k);
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create " + p.parent_path().string());
        nlohmann::ordered_json j{{"key", key_json(k)}, {"text", text}};
        std::ostringstream tag;
        tag << std::this_thread::get_id() << '.' << counter_.fetch_add(1);
        const auto tmp = p.string() + ".tmp." + tag.str();
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot write " + tmp);
            out << j.dump();
            if (!out.flush()) throw IoError("write failed for " + tmp);
        }
        std::filesystem::rename(tmp, p, ec);
        if (ec) throw IoError("cannot move cache entry into place: " + ec.message());
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    mutable std::atomic<std::uint64_t> counter_{0};
};

inline ResponseCache::Key cache_key(const ChatRecord& record, const EndpointConfig& cfg) {
    return {cfg.model_name, render_chatml(record, ChatTemplate::fallback).input_text, cfg.temperature, cfg.max_tokens};
}

// Request body. Only the system and user turns go on the wire; any assistant
// content already on the record (a reference answer) is not sent.
inline nlohmann::ordered_json request_body(const ChatRecord& record, const EndpointConfig& cfg) {
    nlohmann::ordered_json body;
    body["model"] = cfg.model_name;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "system"}, {"content", record.system()}}, {{"role", "user"}, {"content", record.user()}}});
    body["temperature"] = cfg.temperature;
    body["max_tokens"] = cfg.max_tokens;
    return body;
}

namespace detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

inline SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

// Full-jitter delay for retry number `retry` (0-based).
inline std::chrono::milliseconds backoff_delay(const EndpointConfig& cfg, int retry, Rng& rng) {
    const double base = static_cast<double>(cfg.backoff_base.count());
    const double cap = static_cast<double>(cfg.backoff_cap.count());
    const double ceiling = std::min(cap, base * std::ldexp(1.0, std::min(retry, 30)));
    return std::chrono::milliseconds(static_cast<std::int64_t>(rng.unit() * ceiling));
}

enum class Outcome { ok, retry_timeout, retry_status, fatal };

}  // namespace detail

// One record through the endpoint, ignoring the cache. Throws on terminal
// failure; `attempts` reports how many requests were made either way.
inline std::string request_completion(const ChatRecord& record, const EndpointConfig& cfg, int& attempts) {
    cfg.validate();
    const auto url = detail::split_url(cfg.base_url);
    const std::string path = url.prefix + "/v1/chat/completions";
    const std::string body = request_body(record, cfg).dump();
    Rng jitter(derive_seed(cfg.seed, "backoff/" + record.id));

    const auto secs = static_cast<time_t>(cfg.request_timeout_s);
    const auto usecs = static_cast<time_t>((cfg.request_timeout_s - static_cast<double>(secs)) * 1e6);

    attempts = 0;
    std::string last_problem;
    int last_status = 0;
    bool last_was_timeout = false;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(detail::backoff_delay(cfg, attempt - 1, jitter));
        ++attempts;

        httplib::Client client(url.origin);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

        const auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_problem = "transport error: " + httplib::to_string(res.error());
            last_was_timeout = true;
            continue;
        }
        const int status = res->status;
        if (status == 401 || status == 403)
            throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")", status);
        if (status == 429 || status >= 500) {
            last_problem = "HTTP " + std::to_string(status);
            last_status = status;
            last_was_timeout = false;
            continue;
        }
        if (status < 200 || status >= 300)
            throw EndpointError("endpoint returned HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200),
                                status);
        try {
            const auto j = nlohmann::json::parse(res->body);
            const auto& content = j.at("choices").at(0).at("message").at("content");
            if (!content.is_string()) throw EndpointError("completion content is not a string", status);
            std::string text = content.get<std::string>();
            if (text.empty()) throw EndpointError("endpoint returned an empty completion", status);
            return text;
        } catch (const nlohmann::json::exception& e) {
            throw EndpointError(std::string("malformed completion response: ") + e.what(), status);
        }
    }
    if (last_was_timeout)
        throw TimeoutExhaustedError("gave up after " + std::to_string(attempts) + " attempts (" + last_problem + ")");
    throw EndpointError("gave up after " + std::to_string(attempts) + " attempts (" + last_problem + ")", last_status);
}

namespace detail {

// Fills `out` in place so attempt_count survives a throw.
inline void generate_into(const ChatRecord& record, const EndpointConfig& cfg, const ResponseCache* cache,
                          GenerationResult& out) {
    out.record_id = record.id;
    out.model_name = cfg.model_name;
    const auto start = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    };
    std::optional<ResponseCache::Key> key;
    if (cache) {
        key = cache_key(record, cfg);
        if (auto hit = cache->get(*key)) {
            out.text = std::move(*hit);
            out.cached = true;
            out.latency_ms = elapsed();
            return;
        }
    }
    try {
        out.text = request_completion(record, cfg, out.attempt_count);
    } catch (...) {
        out.latency_ms = elapsed();
        throw;
    }
    out.latency_ms = elapsed();
    if (cache) cache->put(*key, out.text);
}

}  // namespace detail

// Throws on failure like request_completion.
inline GenerationResult generate(const ChatRecord& record, const EndpointConfig& cfg,
                                 const ResponseCache* cache = nullptr) {
    GenerationResult out;
    detail::generate_into(record, cfg, cache, out);
    return out;
}

// Runs every record with at most cfg.max_in_flight requests outstanding.
// Results come back in input order; a failing record yields an entry with
// `error` set and never stops the batch.
inline std::vector<GenerationResult> generate_batch(std::span<const ChatRecord> records, const EndpointConfig& cfg,
                                                    const ResponseCache* cache = nullptr) {
    cfg.validate();
    std::vector<GenerationResult> results(records.size());
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) {
            const ChatRecord& record = records[i];
            GenerationResult& slot = results[i];
            try {
                detail::generate_into(record, cfg, cache, slot);
            } catch (const std::exception& e) {
                slot.text.clear();
                slot.error = e.what();
            }
        }
    };

    const std::size_t n_workers = std::min(cfg.max_in_flight, records.size());
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace polypersona
