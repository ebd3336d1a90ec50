#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace vpair {

// One scripted behavior, matched against the client's X-Request-Key header.
// First matching rule wins; a rule with `times` set stops matching once it
// has fired that many times, so transient faults are expressible.
struct MockRule {
    std::string pattern;               // glob
    std::optional<std::string> text;   // response content (200); unset -> default body
    int status = 200;
    int delay_ms = 0;
    int times = -1;  // -1 = unlimited
};

struct MockScript {
    std::vector<MockRule> rules;
};

MockScript mock_script_from_json(const nlohmann::json& j);
MockScript load_mock_script_file(const std::filesystem::path& path);

// Deterministic in-process chat-completions endpoint for offline tests.
// Unmatched requests get a response derived from a hash of the request body.
class MockServer {
public:
    explicit MockServer(MockScript script);
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    // port 0 binds an ephemeral port; returns the bound port.
    int start(int port = 0);
    void stop();

    std::string base_url() const;  // http://127.0.0.1:<port>/v1
    int port() const { return port_; }

    int max_observed_parallel() const { return max_parallel_.load(); }
    long total_requests() const { return total_requests_.load(); }
    void reset_stats();

private:
    void handle_chat(const std::string& request_key, const std::string& body, int& status_out,
                     std::string& body_out);

    MockScript script_;
    std::vector<std::unique_ptr<std::atomic_int>> rule_hits_;
    std::unique_ptr<httplib::Server> server_;
    std::thread serve_thread_;
    int port_ = 0;
    std::atomic_int in_flight_{0};
    std::atomic_int max_parallel_{0};
    std::atomic_long total_requests_{0};
};

}  // namespace vpair
