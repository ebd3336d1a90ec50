#include "vpair/infer_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>

#include "vpair/util.hpp"

namespace vpair {

using nlohmann::json;

std::vector<std::string> endpoint_config_problems(const EndpointConfig& cfg,
                                                  std::string_view label) {
    std::vector<std::string> problems;
    auto note = [&](const std::string& msg) {
        problems.push_back(std::string(label) + ": " + msg);
    };
    if (cfg.base_url.empty()) note("base_url is empty");
    if (cfg.model_name.empty()) note("model_name is empty");
    if (!(cfg.timeout_s > 0.0)) note("timeout_s must be > 0");
    if (cfg.max_retries < 0) note("max_retries must be >= 0");
    if (cfg.max_parallel < 1) note("max_parallel must be >= 1");
    if (cfg.temperature < 0.0) note("temperature must be >= 0");
    if (cfg.max_output_tokens < 1) note("max_output_tokens must be >= 1");
    return problems;
}

std::string make_request_key(std::string_view role, std::string_view video_id, AspectKind aspect,
                             std::string_view version) {
    std::string blob;
    blob.reserve(role.size() + video_id.size() + version.size() + 24);
    blob.append(role);
    blob += '\x1f';
    blob.append(video_id);
    blob += '\x1f';
    blob.append(aspect_name(aspect));
    blob += '\x1f';
    blob.append(version);

    std::string key;
    key.append(role);
    key += ':';
    key += sanitize_key_component(video_id);
    key += ':';
    key.append(aspect_name(aspect));
    key += ':';
    key += (aspect == AspectKind::General) ? "base" : "aug";
    key += ':';
    key += short_hash(blob);
    return key;
}

json chat_request_body(const EndpointConfig& cfg, const ChatRequest& request) {
    json messages = json::array();
    if (!request.system_text.empty()) {
        messages.push_back({{"role", "system"}, {"content", request.system_text}});
    }
    json parts = json::array();
    for (const auto& url : request.image_data_urls) {
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
    parts.push_back({{"type", "text"}, {"text", request.user_text}});
    messages.push_back({{"role", "user"}, {"content", parts}});
    return json{{"model", cfg.model_name},
                {"temperature", cfg.temperature},
                {"max_tokens", cfg.max_output_tokens},
                {"messages", messages}};
}

namespace {

struct ParsedUrl {
    std::string host_port;  // scheme://host:port for httplib::Client
    std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base_url.find('/', host_start);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.host_port = base_url;
    } else {
        out.host_port = base_url.substr(0, path_start);
        out.path_prefix = base_url.substr(path_start);
    }
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
        out.path_prefix.pop_back();
    }
    return out;
}

bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

double backoff_with_jitter(const EndpointConfig& cfg, int attempt) {
    double cap = std::min(cfg.retry_cap_s, cfg.retry_base_s * std::pow(2.0, attempt));
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::uniform_real_distribution<double> dist(0.0, cap);
    return dist(rng);
}

std::string body_excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    if (body.size() <= kMax) return body;
    return body.substr(0, kMax) + "...";
}

}  // namespace

ChatOutcome send_chat(const EndpointConfig& cfg, const ChatRequest& request) {
    ParsedUrl url = parse_base_url(cfg.base_url);
    std::string path = url.path_prefix + "/chat/completions";
    std::string body = chat_request_body(cfg, request).dump();

    httplib::Headers headers = {{"X-Request-Key", request.request_key}};
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    ChatOutcome outcome;
    const int max_attempts = cfg.max_retries + 1;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::duration<double>(backoff_with_jitter(cfg, attempt - 1)));
        }
        outcome.attempts = attempt + 1;

        httplib::Client client(url.host_port);
        auto timeout = std::chrono::duration<double>(cfg.timeout_s);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        httplib::Result res = client.Post(path, headers, body, "application/json");
        if (!res) {
            outcome.failure = InferFailure::transport;
            outcome.error_detail = "transport error: " + httplib::to_string(res.error());
            continue;  // retryable
        }
        if (res->status != 200) {
            outcome.http_status = res->status;
            outcome.error_detail =
                "HTTP " + std::to_string(res->status) + ": " + body_excerpt(res->body);
            if (retryable_status(res->status)) {
                outcome.failure = InferFailure::transport;
                continue;
            }
            outcome.failure = InferFailure::endpoint;
            return outcome;
        }

        json parsed;
        try {
            parsed = json::parse(res->body);
        } catch (const json::exception& e) {
            outcome.failure = InferFailure::empty_response;
            outcome.error_detail = std::string("unparseable response body: ") + e.what();
            return outcome;
        }
        std::string content;
        try {
            content = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            outcome.failure = InferFailure::empty_response;
            outcome.error_detail = "response carries no message content";
            return outcome;
        }
        if (content.empty()) {
            outcome.failure = InferFailure::empty_response;
            outcome.error_detail = "empty message content";
            return outcome;
        }
        outcome.ok = true;
        outcome.content = std::move(content);
        outcome.http_status = 200;
        if (parsed.contains("usage") && parsed["usage"].contains("completion_tokens")) {
            outcome.completion_tokens = parsed["usage"]["completion_tokens"].get<int>();
        }
        return outcome;
    }
    // Retries exhausted on a retryable condition.
    outcome.ok = false;
    if (outcome.error_detail.empty()) outcome.error_detail = "delivery failed";
    outcome.failure = InferFailure::transport;
    return outcome;
}

void to_json(json& j, const Caption& c) {
    j = json{{"video_id", c.video_id},
             {"aspect", aspect_name(c.aspect)},
             {"query_text", c.query_text},
             {"caption_text", c.caption_text},
             {"model_name", c.model_name},
             {"created_at", c.created_at}};
    if (c.token_count) j["token_count"] = *c.token_count;
}

void from_json(const json& j, Caption& c) {
    c.video_id = j.at("video_id").get<std::string>();
    auto aspect = aspect_from_name(j.at("aspect").get<std::string>());
    if (!aspect) throw ParseError("caption: unknown aspect \"" + j["aspect"].dump() + "\"");
    c.aspect = *aspect;
    c.query_text = j.at("query_text").get<std::string>();
    c.caption_text = j.at("caption_text").get<std::string>();
    c.model_name = j.value("model_name", std::string());
    c.created_at = j.value("created_at", std::string());
    c.token_count.reset();
    if (j.contains("token_count") && !j["token_count"].is_null()) {
        c.token_count = j["token_count"].get<int>();
    }
}

Caption generate_caption(const EndpointConfig& cfg, const VideoRecord& video,
                         const FrameSamplePlan& plan, const AspectQuery& query,
                         const std::vector<std::string>& frame_data_urls,
                         std::string_view registry_version) {
    if (frame_data_urls.size() != plan.timestamps_ms.size()) {
        throw Error("generate_caption: " + std::to_string(frame_data_urls.size()) +
                    " frames supplied for a plan of " + std::to_string(plan.timestamps_ms.size()) +
                    " (video \"" + video.video_id + "\")");
    }
    ChatRequest request;
    request.request_key = make_request_key("cap", video.video_id, query.aspect, registry_version);
    request.user_text = query.composed_text;
    request.image_data_urls = frame_data_urls;

    ChatOutcome outcome = send_chat(cfg, request);
    if (!outcome.ok) {
        switch (outcome.failure) {
            case InferFailure::transport:
                throw InferError(InferFailure::transport,
                                 "caption delivery failed for \"" + video.video_id +
                                     "\" after " + std::to_string(outcome.attempts) +
                                     " attempts: " + outcome.error_detail,
                                 outcome.http_status, outcome.attempts);
            case InferFailure::endpoint:
                throw InferError(InferFailure::endpoint,
                                 "caption endpoint error for \"" + video.video_id +
                                     "\": " + outcome.error_detail,
                                 outcome.http_status, outcome.attempts);
            case InferFailure::empty_response:
                throw InferError(InferFailure::empty_response,
                                 "caption response empty for \"" + video.video_id +
                                     "\": " + outcome.error_detail,
                                 outcome.http_status, outcome.attempts);
        }
    }
    Caption caption;
    caption.video_id = video.video_id;
    caption.aspect = query.aspect;
    caption.query_text = query.composed_text;
    caption.caption_text = outcome.content;
    caption.model_name = cfg.model_name;
    caption.token_count = outcome.completion_tokens;
    caption.created_at = iso8601_utc_now();
    return caption;
}

}  // namespace vpair
