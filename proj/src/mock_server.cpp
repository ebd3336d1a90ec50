#include "vpair/mock_server.hpp"

#include <chrono>
#include <sstream>

#include <httplib.h>

#include "vpair/errors.hpp"
#include "vpair/util.hpp"

namespace vpair {

using nlohmann::json;

MockScript mock_script_from_json(const json& j) {
    MockScript script;
    if (!j.contains("rules")) return script;
    for (const auto& rule_json : j.at("rules")) {
        MockRule rule;
        rule.pattern = rule_json.at("pattern").get<std::string>();
        if (rule_json.contains("text")) rule.text = rule_json["text"].get<std::string>();
        if (rule_json.contains("status")) rule.status = rule_json["status"].get<int>();
        if (rule_json.contains("delay_ms")) rule.delay_ms = rule_json["delay_ms"].get<int>();
        if (rule_json.contains("times")) rule.times = rule_json["times"].get<int>();
        script.rules.push_back(std::move(rule));
    }
    return script;
}

MockScript load_mock_script_file(const std::filesystem::path& path) {
    return mock_script_from_json(json::parse(read_text_file(path)));
}

namespace {

int count_words(const std::string& text) {
    std::istringstream ss(text);
    std::string word;
    int n = 0;
    while (ss >> word) ++n;
    return n;
}

std::string completion_body(const std::string& content) {
    json j = {
        {"id", "mock-completion"},
        {"object", "chat.completion"},
        {"model", "mock"},
        {"choices",
         json::array({{{"index", 0},
                       {"message", {{"role", "assistant"}, {"content", content}}},
                       {"finish_reason", "stop"}}})},
        {"usage",
         {{"prompt_tokens", 0},
          {"completion_tokens", count_words(content)},
          {"total_tokens", count_words(content)}}},
    };
    return j.dump();
}

}  // namespace

MockServer::MockServer(MockScript script) : script_(std::move(script)) {
    rule_hits_.reserve(script_.rules.size());
    for (std::size_t i = 0; i < script_.rules.size(); ++i) {
        rule_hits_.push_back(std::make_unique<std::atomic_int>(0));
    }
}

MockServer::~MockServer() { stop(); }

void MockServer::handle_chat(const std::string& request_key, const std::string& body,
                             int& status_out, std::string& body_out) {
    for (std::size_t i = 0; i < script_.rules.size(); ++i) {
        const MockRule& rule = script_.rules[i];
        if (!glob_match(rule.pattern, request_key)) continue;
        if (rule.times >= 0) {
            // Claim one slot; release and fall through once exhausted.
            int hit = rule_hits_[i]->fetch_add(1);
            if (hit >= rule.times) continue;
        }
        if (rule.delay_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(rule.delay_ms));
        }
        if (rule.status != 200) {
            status_out = rule.status;
            body_out = json{{"error", {{"message", "scripted fault"}, {"type", "mock_fault"}}}}
                           .dump();
            return;
        }
        status_out = 200;
        body_out = completion_body(rule.text ? *rule.text : "mock:" + short_hash(body));
        return;
    }
    status_out = 200;
    body_out = completion_body("mock:" + short_hash(body));
}

int MockServer::start(int port) {
    server_ = std::make_unique<httplib::Server>();
    server_->new_task_queue = [] { return new httplib::ThreadPool(64); };

    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        int now = ++in_flight_;
        int seen = max_parallel_.load();
        while (now > seen && !max_parallel_.compare_exchange_weak(seen, now)) {
        }
        ++total_requests_;

        std::string key = req.get_header_value("X-Request-Key");
        int status = 200;
        std::string body;
        handle_chat(key, req.body, status, body);
        res.status = status;
        res.set_content(body, "application/json");

        --in_flight_;
    };
    server_->Post("/chat/completions", handler);
    server_->Post("/v1/chat/completions", handler);
    server_->Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
        json j = {{"max_observed_parallel", max_observed_parallel()},
                  {"total_requests", total_requests()}};
        res.set_content(j.dump(), "application/json");
    });
    server_->Post("/stats/reset", [this](const httplib::Request&, httplib::Response& res) {
        reset_stats();
        res.set_content("{}", "application/json");
    });

    if (port == 0) {
        port_ = server_->bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw Error("mock server: cannot bind an ephemeral port");
    } else {
        if (!server_->bind_to_port("127.0.0.1", port)) {
            throw Error("mock server: cannot bind port " + std::to_string(port));
        }
        port_ = port;
    }
    serve_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void MockServer::stop() {
    if (server_) {
        server_->stop();
    }
    if (serve_thread_.joinable()) {
        serve_thread_.join();
    }
    server_.reset();
}

std::string MockServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
}

void MockServer::reset_stats() {
    max_parallel_ = 0;
    total_requests_ = 0;
}

}  // namespace vpair
