#pragma once

// In-process chat-completion endpoint for offline runs and tests. Replies are
// a deterministic function of the request (model + messages), shaped by the
// question type found in the user message. Counts requests and the peak
// number of requests being served at once.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "polypersona/random.hpp"
#include "polypersona/text.hpp"

namespace polypersona::mock {

namespace detail {

inline std::string line_after(std::string_view text, std::string_view prefix) {
    const auto at = text.find(prefix);
    if (at == std::string_view::npos) return {};
    const auto start = at + prefix.size();
    const auto end = text.find('\n', start);
    return std::string(trim(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start)));
}

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& options, Rng& rng) {
    return options[rng.below(N)];
}

}  // namespace detail

// Survey-style answer for a composed user message.
inline std::string respond(std::string_view model, std::string_view user_message) {
    Rng rng(fnv1a64(std::string(model) + '\x1f' + std::string(user_message)));
    std::string qtype;
    if (const auto at = user_message.find("Question ("); at != std::string_view::npos) {
        const auto close = user_message.find(')', at);
        qtype = std::string(user_message.substr(at + 10, close - at - 10));
    }
    const std::string persona = detail::line_after(user_message, "Persona:");
    const std::string domain = lowercase(detail::line_after(user_message, "Domain:"));
    const std::string scale = detail::line_after(user_message, "Scale:");

    static constexpr std::array<std::string_view, 4> reasons = {
        "It matches what I have seen in my own daily routine",
        "My experience over the past few years points that way",
        "People around me would probably say the same thing",
        "That is how it has worked out for me so far",
    };
    if (qtype == "yesno") {
        const bool yes = rng.below(3) != 0;
        return std::string(yes ? "Yes. " : "No. ") + std::string(detail::pick(reasons, rng)) + ".";
    }
    if (qtype == "likert") {
        std::string anchor = "Agree";
        if (!scale.empty()) {
            const auto parts = split(scale, '|');
            if (!parts.empty()) anchor = parts[rng.below(parts.size())];
        }
        return anchor + ". " + std::string(detail::pick(reasons, rng)) + ".";
    }
    if (qtype == "agreement") {
        static constexpr std::array<std::string_view, 4> stances = {"I agree", "I strongly agree", "I disagree",
                                                                    "I somewhat agree"};
        return std::string(detail::pick(stances, rng)) + " with this statement. " +
               std::string(detail::pick(reasons, rng)) + ".";
    }
    static constexpr std::array<std::string_view, 4> openers = {
        "Speaking from my own background, I think about this a lot when it comes to ",
        "Honestly, my view on ",
        "When I reflect on ",
        "In my situation, questions about ",
    };
    static constexpr std::array<std::string_view, 4> middles = {
        " has been shaped by practical experience rather than theory.",
        " keeps changing as my responsibilities grow and my priorities shift.",
        " is mostly about balancing cost, time and what my family needs.",
        " depends on the people I work with and the community I live in.",
    };
    static constexpr std::array<std::string_view, 4> closers = {
        "I try to stay informed and adjust when something is clearly not working.",
        "Overall I feel fairly positive, although there is still room for improvement.",
        "I would like to see more honest conversations about it in my circle.",
        "Most days it feels manageable, but some weeks are harder than others.",
    };
    std::string out(detail::pick(openers, rng));
    out += domain.empty() ? std::string("this topic") : domain;
    out += detail::pick(middles, rng);
    out += ' ';
    if (!persona.empty()) {
        const auto words = split(persona, ' ');
        out += "As someone described as " + join(std::vector<std::string>(words.begin(), words.begin() + std::min<std::size_t>(words.size(), 8)), " ") +
               ", that perspective matters to me. ";
    }
    out += detail::pick(closers, rng);
    return out;
}

// Decides how the n-th request (0-based) is answered: nullopt serves a
// normal completion, otherwise the returned HTTP status is sent instead.
using FaultScript = std::function<std::optional<int>(std::size_t request_index, const nlohmann::json& body)>;

class MockEndpoint {
public:
    explicit MockEndpoint(FaultScript faults = {}, std::chrono::milliseconds delay = std::chrono::milliseconds(0))
        : faults_(std::move(faults)), delay_(delay) {
        server_.new_task_queue = [] { return new httplib::ThreadPool(16); };
        server_.Post(R"(.*/v1/chat/completions)", [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res);
        });
    }

    ~MockEndpoint() { stop(); }

    MockEndpoint(const MockEndpoint&) = delete;
    MockEndpoint& operator=(const MockEndpoint&) = delete;

    // Binds 127.0.0.1 on `port` (0 picks a free one) and serves in the background.
    int start(int port = 0) {
        port_ = port == 0 ? server_.bind_to_any_port("127.0.0.1") : (server_.bind_to_port("127.0.0.1", port) ? port : -1);
        if (port_ < 0) throw std::runtime_error("mock endpoint could not bind");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    // Blocks serving requests on the calling thread.
    void serve_forever(const std::string& host, int port) { server_.listen(host, port); }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::size_t requests() const { return requests_.load(); }
    std::size_t peak_in_flight() const { return peak_.load(); }

    std::vector<nlohmann::json> bodies() const {
        std::lock_guard<std::mutex> lock(mu_);
        return bodies_;
    }

    void reset_counters() {
        requests_ = 0;
        peak_ = 0;
        std::lock_guard<std::mutex> lock(mu_);
        bodies_.clear();
    }

private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        const std::size_t index = requests_.fetch_add(1);
        const std::size_t now = in_flight_.fetch_add(1) + 1;
        std::size_t peak = peak_.load();
        while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
        }
        struct Leave {
            std::atomic<std::size_t>& n;
            ~Leave() { n.fetch_sub(1); }
        } leave{in_flight_};

        if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception&) {
            res.status = 400;
            res.set_content(R"({"error":"bad json"})", "application/json");
            return;
        }
        {
            std::lock_guard<std::mutex> lock(mu_);
            bodies_.push_back(body);
        }
        if (faults_) {
            if (const auto status = faults_(index, body)) {
                res.status = *status;
                res.set_content(R"({"error":"injected"})", "application/json");
                return;
            }
        }
        std::string user;
        for (const auto& m : body.value("messages", nlohmann::json::array()))
            if (m.value("role", "") == "user") user = m.value("content", "");
        const std::string model = body.value("model", "");
        nlohmann::json reply = {
            {"id", "mock-" + std::to_string(index)},
            {"object", "chat.completion"},
            {"model", model},
            {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", respond(model, user)}}},
                          {"finish_reason", "stop"}}}},
        };
        res.set_content(reply.dump(), "application/json");
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
    FaultScript faults_;
    std::chrono::milliseconds delay_;
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> peak_{0};
    mutable std::mutex mu_;
    std::vector<nlohmann::json> bodies_;
};

}  // namespace polypersona::mock
