#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "vpair/mock_server.hpp"
#include "vpair/util.hpp"

using namespace vpair;
using nlohmann::json;

namespace {

struct MockResponse {
    int status = 0;
    std::string content;
};

MockResponse post_chat(int port, const std::string& key, const std::string& body = "{}") {
    httplib::Client client("http://127.0.0.1:" + std::to_string(port));
    httplib::Headers headers = {{"X-Request-Key", key}};
    auto res = client.Post("/v1/chat/completions", headers, body, "application/json");
    REQUIRE(res);
    MockResponse out;
    out.status = res->status;
    if (res->status == 200) {
        out.content = json::parse(res->body)["choices"][0]["message"]["content"];
    }
    return out;
}

}  // namespace

TEST_CASE("unmatched requests get a deterministic body-hash response") {
    MockServer server({});
    int port = server.start();
    auto a = post_chat(port, "anykey", "{\"q\":1}");
    auto b = post_chat(port, "anykey", "{\"q\":1}");
    auto c = post_chat(port, "anykey", "{\"q\":2}");
    CHECK(a.status == 200);
    CHECK(a.content == b.content);
    CHECK(a.content != c.content);
    CHECK(a.content.rfind("mock:", 0) == 0);
    CHECK(server.total_requests() == 3);
}

TEST_CASE("first matching rule wins") {
    MockScript script;
    script.rules.push_back({"judge:*aug*", std::string("SCORE: 9"), 200, 0, -1});
    script.rules.push_back({"judge:*base*", std::string("SCORE: 2"), 200, 0, -1});
    script.rules.push_back({"judge:*", std::string("SCORE: 5"), 200, 0, -1});
    MockServer server(std::move(script));
    int port = server.start();
    CHECK(post_chat(port, "judge:v1:spatial:aug:ab12").content == "SCORE: 9");
    CHECK(post_chat(port, "judge:v1:general:base:cd34").content == "SCORE: 2");
    CHECK(post_chat(port, "judge:v1:other").content == "SCORE: 5");
    CHECK(post_chat(port, "cap:v1:general:base:ef56").content.rfind("mock:", 0) == 0);
}

TEST_CASE("error-status rules inject faults") {
    MockScript script;
    script.rules.push_back({"*7", std::nullopt, 503, 0, -1});
    MockServer server(std::move(script));
    int port = server.start();
    CHECK(post_chat(port, "job-17").status == 503);
    CHECK(post_chat(port, "job-18").status == 200);
}

TEST_CASE("times-limited rules expire in order") {
    MockScript script;
    script.rules.push_back({"*", std::nullopt, 503, 0, 2});
    script.rules.push_back({"*", std::string("recovered"), 200, 0, -1});
    MockServer server(std::move(script));
    int port = server.start();
    CHECK(post_chat(port, "k").status == 503);
    CHECK(post_chat(port, "k").status == 503);
    auto third = post_chat(port, "k");
    CHECK(third.status == 200);
    CHECK(third.content == "recovered");
}

TEST_CASE("empty scripted text means an empty content field") {
    MockScript script;
    script.rules.push_back({"*", std::string(""), 200, 0, -1});
    MockServer server(std::move(script));
    int port = server.start();
    auto res = post_chat(port, "k");
    CHECK(res.status == 200);
    CHECK(res.content.empty());
}

TEST_CASE("stats endpoint reports and resets") {
    MockServer server({});
    int port = server.start();
    post_chat(port, "a");
    post_chat(port, "b");

    httplib::Client client("http://127.0.0.1:" + std::to_string(port));
    auto stats = client.Get("/stats");
    REQUIRE(stats);
    json j = json::parse(stats->body);
    CHECK(j["total_requests"] == 2);
    CHECK(j["max_observed_parallel"].get<int>() >= 1);

    auto reset = client.Post("/stats/reset", "", "application/json");
    REQUIRE(reset);
    CHECK(server.total_requests() == 0);
    CHECK(server.max_observed_parallel() == 0);
}

TEST_CASE("scripts load from json") {
    json j = {{"rules",
               json::array({{{"pattern", "judge:*aug*"}, {"text", "SCORE: 9"}},
                            {{"pattern", "*7"}, {"status", 503}},
                            {{"pattern", "slow*"}, {"text", "ok"}, {"delay_ms", 5},
                             {"times", 3}}})}};
    MockScript script = mock_script_from_json(j);
    REQUIRE(script.rules.size() == 3);
    CHECK(script.rules[0].pattern == "judge:*aug*");
    CHECK(script.rules[0].text == "SCORE: 9");
    CHECK(script.rules[1].status == 503);
    CHECK_FALSE(script.rules[1].text.has_value());
    CHECK(script.rules[2].delay_ms == 5);
    CHECK(script.rules[2].times == 3);
}

TEST_CASE("glob matching semantics") {
    CHECK(glob_match("*", ""));
    CHECK(glob_match("*", "anything"));
    CHECK(glob_match("judge:*aug*", "judge:v1:spatial:aug:12f7"));
    CHECK_FALSE(glob_match("judge:*aug*", "cap:v1:spatial:aug:12f7"));
    CHECK(glob_match("*7", "key-ending-7"));
    CHECK_FALSE(glob_match("*7", "key-ending-70"));
    CHECK(glob_match("a?c", "abc"));
    CHECK_FALSE(glob_match("a?c", "ac"));
    CHECK(glob_match("", ""));
    CHECK_FALSE(glob_match("", "x"));
}
