#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "vpair/batch.hpp"
#include "vpair/checkpoint.hpp"
#include "vpair/infer_client.hpp"
#include "vpair/mock_server.hpp"
#include "vpair/util.hpp"

using namespace vpair;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

EndpointConfig fast_endpoint(const MockServer& server, int max_parallel = 2,
                             int max_retries = 3) {
    EndpointConfig cfg;
    cfg.base_url = server.base_url();
    cfg.model_name = "mock-model";
    cfg.timeout_s = 5.0;
    cfg.max_retries = max_retries;
    cfg.max_parallel = max_parallel;
    cfg.retry_base_s = 0.005;
    cfg.retry_cap_s = 0.02;
    return cfg;
}

fs::path fresh_store(const std::string& name) {
    fs::path path = fs::temp_directory_path() / ("vpair_infer_" + name) / "ckpt.jsonl";
    fs::remove_all(path.parent_path());
    return path;
}

ChatRequest simple_request(const std::string& key) {
    ChatRequest r;
    r.request_key = key;
    r.user_text = "describe";
    return r;
}

VideoRecord demo_video() {
    VideoRecord v;
    v.video_id = "v1";
    v.media_uri = "v1.mp4";
    v.duration_s = 1.0;
    return v;
}

FrameSamplePlan demo_plan() {
    FrameSamplePlan p;
    p.video_id = "v1";
    p.timestamps_ms = {0, 500};
    return p;
}

}  // namespace

TEST_CASE("request keys are structured and injective across the run") {
    std::string key = make_request_key("cap", "v1", AspectKind::Spatial, "rv-abc");
    CHECK(key.rfind("cap:v1:spatial:aug:", 0) == 0);
    CHECK(make_request_key("cap", "v1", AspectKind::General, "rv-abc").find(":base:") !=
          std::string::npos);

    std::set<std::string> keys;
    int expected = 0;
    for (int v = 0; v < 150; ++v) {
        for (AspectKind aspect : kAllAspects) {
            for (const char* role : {"cap", "judge"}) {
                for (const char* version : {"rv-1", "rv-2"}) {
                    keys.insert(
                        make_request_key(role, "vid" + std::to_string(v), aspect, version));
                    ++expected;
                }
            }
        }
    }
    CHECK(static_cast<int>(keys.size()) == expected);

    SUBCASE("ids with separators or spaces cannot forge key structure") {
        std::string tricky = make_request_key("cap", "v:1 x", AspectKind::General, "rv-1");
        CHECK(tricky.find("v_1_x") != std::string::npos);
        CHECK(tricky != make_request_key("cap", "v_1_x", AspectKind::General, "rv-1"));
    }
}

TEST_CASE("chat request bodies put frames before the text part") {
    EndpointConfig cfg;
    cfg.model_name = "m";
    cfg.temperature = 0.0;
    cfg.max_output_tokens = 64;
    ChatRequest req = simple_request("k");
    req.system_text = "sys";
    req.image_data_urls = {"data:image/jpeg;base64,AA==", "data:image/jpeg;base64,BB=="};
    json body = chat_request_body(cfg, req);

    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    const json& content = body["messages"][1]["content"];
    REQUIRE(content.size() == 3);
    CHECK(content[0]["type"] == "image_url");
    CHECK(content[0]["image_url"]["url"] == "data:image/jpeg;base64,AA==");
    CHECK(content[1]["type"] == "image_url");
    CHECK(content[2]["type"] == "text");
    CHECK(content[2]["text"] == "describe");
    CHECK(body["model"] == "m");
    CHECK(body["max_tokens"] == 64);

    ChatRequest no_sys = simple_request("k2");
    CHECK(chat_request_body(cfg, no_sys)["messages"].size() == 1);
}

TEST_CASE("send_chat returns scripted content") {
    MockScript script;
    script.rules.push_back({"hello*", std::string("hi there"), 200, 0, -1});
    MockServer server(std::move(script));
    server.start();
    auto outcome = send_chat(fast_endpoint(server), simple_request("hello-1"));
    CHECK(outcome.ok);
    CHECK(outcome.content == "hi there");
    CHECK(outcome.attempts == 1);
    CHECK(outcome.completion_tokens == 2);
}

TEST_CASE("transient 503s are retried until success") {
    MockScript script;
    script.rules.push_back({"*", std::nullopt, 503, 0, 2});
    script.rules.push_back({"*", std::string("recovered"), 200, 0, -1});
    MockServer server(std::move(script));
    server.start();

    auto outcome = send_chat(fast_endpoint(server, 1, 3), simple_request("k"));
    CHECK(outcome.ok);
    CHECK(outcome.content == "recovered");
    CHECK(outcome.attempts == 3);
    CHECK(server.total_requests() == 3);
}

TEST_CASE("persistent failures exhaust retries into a delivery error") {
    MockScript script;
    script.rules.push_back({"*", std::nullopt, 503, 0, -1});
    MockServer server(std::move(script));
    server.start();

    auto outcome = send_chat(fast_endpoint(server, 1, 1), simple_request("k"));
    CHECK_FALSE(outcome.ok);
    CHECK(outcome.failure == InferFailure::transport);
    CHECK(outcome.attempts == 2);  // initial try + one retry
    CHECK(server.total_requests() == 2);
}

TEST_CASE("non-retryable 4xx statuses fail immediately as endpoint errors") {
    MockScript script;
    script.rules.push_back({"*", std::nullopt, 400, 0, -1});
    MockServer server(std::move(script));
    server.start();

    auto outcome = send_chat(fast_endpoint(server, 1, 5), simple_request("k"));
    CHECK_FALSE(outcome.ok);
    CHECK(outcome.failure == InferFailure::endpoint);
    CHECK(outcome.http_status == 400);
    CHECK(outcome.attempts == 1);
    CHECK(server.total_requests() == 1);
}

TEST_CASE("timeouts count as transport failures") {
    MockScript script;
    script.rules.push_back({"*", std::string("slow"), 200, 400, -1});
    MockServer server(std::move(script));
    server.start();

    EndpointConfig cfg = fast_endpoint(server, 1, 1);
    cfg.timeout_s = 0.05;
    auto outcome = send_chat(cfg, simple_request("k"));
    CHECK_FALSE(outcome.ok);
    CHECK(outcome.failure == InferFailure::transport);
    CHECK(outcome.attempts == 2);
}

TEST_CASE("generate_caption binds the endpoint reply to the query") {
    MockScript script;
    script.rules.push_back({"cap:v1:spatial:*", std::string("CAPTION(v1,Spatial)"), 200, 0, -1});
    MockServer server(std::move(script));
    server.start();

    PromptRegistry reg = default_prompt_registry();
    AspectQuery query = compose_query(reg, AspectKind::Spatial);
    std::vector<std::string> frames = {"data:image/jpeg;base64,AA==",
                                       "data:image/jpeg;base64,BB=="};
    Caption caption = generate_caption(fast_endpoint(server), demo_video(), demo_plan(), query,
                                       frames, reg.registry_version);
    CHECK(caption.caption_text == "CAPTION(v1,Spatial)");
    CHECK(caption.aspect == AspectKind::Spatial);
    CHECK(caption.video_id == "v1");
    CHECK(caption.query_text == query.composed_text);
    CHECK(caption.model_name == "mock-model");

    SUBCASE("frame count must match the plan") {
        std::vector<std::string> short_frames = {"data:image/jpeg;base64,AA=="};
        CHECK_THROWS_AS(generate_caption(fast_endpoint(server), demo_video(), demo_plan(), query,
                                         short_frames, reg.registry_version),
                        Error);
    }
}

TEST_CASE("generate_caption surfaces failures as typed errors") {
    SUBCASE("delivery") {
        MockScript script;
        script.rules.push_back({"*", std::nullopt, 503, 0, -1});
        MockServer server(std::move(script));
        server.start();
        PromptRegistry reg = default_prompt_registry();
        AspectQuery query = compose_query(reg, AspectKind::General);
        std::vector<std::string> frames = {"d", "d"};
        try {
            generate_caption(fast_endpoint(server, 1, 1), demo_video(), demo_plan(), query,
                             frames, reg.registry_version);
            FAIL("expected InferError");
        } catch (const InferError& e) {
            CHECK(e.kind == InferFailure::transport);
            CHECK(e.attempts == 2);
        }
    }
    SUBCASE("empty content") {
        MockScript script;
        script.rules.push_back({"*", std::string(""), 200, 0, -1});
        MockServer server(std::move(script));
        server.start();
        PromptRegistry reg = default_prompt_registry();
        AspectQuery query = compose_query(reg, AspectKind::General);
        std::vector<std::string> frames = {"d", "d"};
        try {
            generate_caption(fast_endpoint(server), demo_video(), demo_plan(), query, frames,
                             reg.registry_version);
            FAIL("expected InferError");
        } catch (const InferError& e) {
            CHECK(e.kind == InferFailure::empty_response);
        }
    }
}

TEST_CASE("checkpoint stores persist, reload, and reject duplicates") {
    fs::path path = fresh_store("basic");
    {
        CheckpointStore store(path);
        CHECK(store.size() == 0);
        CheckpointRecord rec;
        rec.key = "a";
        rec.ok = true;
        rec.content = "hello";
        rec.meta = json{{"video_id", "v1"}};
        store.append(rec);
        CHECK(store.contains("a"));
        CHECK_THROWS_AS(store.append(rec), ConflictError);
    }
    {
        CheckpointStore reloaded(path);
        REQUIRE(reloaded.size() == 1);
        auto rec = reloaded.get("a");
        REQUIRE(rec.has_value());
        CHECK(rec->content == "hello");
        CHECK(rec->meta["video_id"] == "v1");
    }
    SUBCASE("a truncated trailing line is ignored") {
        std::ofstream(path, std::ios::app) << "{\"key\": \"b\", \"ok\": tr";
        CheckpointStore reloaded(path);
        CHECK(reloaded.size() == 1);
        CHECK_FALSE(reloaded.contains("b"));
    }
}

TEST_CASE("run_batch skips checkpointed jobs and reports counts") {
    MockServer server({});
    server.start();
    fs::path path = fresh_store("resume");
    CheckpointStore store(path);

    std::vector<BatchJob> jobs;
    for (int i = 0; i < 10; ++i) {
        BatchJob job;
        job.request = simple_request("job-" + std::to_string(i));
        job.meta = json{{"i", i}};
        jobs.push_back(job);
    }
    for (int i = 0; i < 4; ++i) {  // pre-checkpoint four of them
        CheckpointRecord rec;
        rec.key = "job-" + std::to_string(i);
        rec.ok = true;
        rec.content = "cached";
        store.append(rec);
    }

    BatchReport report = run_batch(fast_endpoint(server, 3), jobs, store);
    CHECK(report.succeeded == 6);
    CHECK(report.skipped == 4);
    CHECK(report.failed == 0);
    CHECK(server.total_requests() == 6);
    CHECK(store.size() == 10);

    SUBCASE("a fully checkpointed batch performs zero network calls") {
        long before = server.total_requests();
        BatchReport again = run_batch(fast_endpoint(server, 3), jobs, store);
        CHECK(again.skipped == 10);
        CHECK(again.succeeded == 0);
        CHECK(server.total_requests() == before);
    }
}

TEST_CASE("run_batch records scripted failures without aborting") {
    MockScript script;
    script.rules.push_back({"*7", std::nullopt, 503, 0, -1});
    MockServer server(std::move(script));
    server.start();
    fs::path path = fresh_store("faults");
    CheckpointStore store(path);

    std::vector<BatchJob> jobs;
    int expected_failures = 0;
    for (int i = 0; i < 20; ++i) {
        std::string key = "job-" + std::to_string(i);
        if (!key.empty() && key.back() == '7') ++expected_failures;
        BatchJob job;
        job.request = simple_request(key);
        jobs.push_back(job);
    }
    REQUIRE(expected_failures > 0);

    BatchReport report = run_batch(fast_endpoint(server, 4, 1), jobs, store);
    CHECK(report.failed == expected_failures);
    CHECK(report.succeeded == 20 - expected_failures);
    for (const auto& key : report.failed_keys) {
        CHECK(key.back() == '7');
        auto rec = store.get(key);
        REQUIRE(rec.has_value());
        CHECK_FALSE(rec->ok);
        CHECK(rec->http_status == 503);
    }
}

TEST_CASE("run_batch bounds in-flight parallelism") {
    MockScript script;
    script.rules.push_back({"*", std::string("ok"), 200, 8, -1});
    MockServer server(std::move(script));
    server.start();
    fs::path path = fresh_store("parallel");
    CheckpointStore store(path);

    std::vector<BatchJob> jobs;
    for (int i = 0; i < 24; ++i) {
        BatchJob job;
        job.request = simple_request("p-" + std::to_string(i));
        jobs.push_back(job);
    }
    BatchReport report = run_batch(fast_endpoint(server, 3), jobs, store);
    CHECK(report.succeeded == 24);
    CHECK(report.max_in_flight <= 3);
    CHECK(server.max_observed_parallel() <= 3);
}

TEST_CASE("run_batch edge cases") {
    MockServer server({});
    server.start();
    fs::path path = fresh_store("edge");
    CheckpointStore store(path);

    CHECK(run_batch(fast_endpoint(server), {}, store).total() == 0);

    std::vector<BatchJob> dup(2);
    dup[0].request = simple_request("same");
    dup[1].request = simple_request("same");
    CHECK_THROWS_AS(run_batch(fast_endpoint(server), dup, store), ConflictError);
}
