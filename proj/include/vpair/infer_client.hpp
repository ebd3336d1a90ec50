#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vpair/corpus.hpp"
#include "vpair/errors.hpp"
#include "vpair/prompts.hpp"

namespace vpair {

struct EndpointConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8000/v1
    std::string model_name;
    std::string api_key_env;  // env var holding the bearer token; empty = none
    double timeout_s = 30.0;
    int max_retries = 3;
    int max_parallel = 4;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    // Exponential backoff with full jitter; retries cover transport errors
    // and HTTP 429/5xx only.
    double retry_base_s = 0.1;
    double retry_cap_s = 2.0;
};

// Returns the list of violations; empty means valid.
std::vector<std::string> endpoint_config_problems(const EndpointConfig& cfg,
                                                  std::string_view label);

struct ChatRequest {
    std::string request_key;
    std::string system_text;  // optional
    std::string user_text;
    std::vector<std::string> image_data_urls;  // frame payloads in plan order
};

// Stable, human-scannable key: <role>:<video_id>:<aspect>:<base|aug>:<hash8>.
// The hash covers the raw (role, video_id, aspect, version) tuple, so keys
// change whenever prompt or principle versions do.
std::string make_request_key(std::string_view role, std::string_view video_id, AspectKind aspect,
                             std::string_view version);

struct ChatOutcome {
    bool ok = false;
    std::string content;
    InferFailure failure = InferFailure::transport;  // valid when !ok
    int http_status = 0;
    std::string error_detail;
    int attempts = 0;
    std::optional<int> completion_tokens;
};

// Blocking single request with retry/backoff. Failures are reported in the
// outcome, not thrown; callers decide what is fatal.
ChatOutcome send_chat(const EndpointConfig& cfg, const ChatRequest& request);

// Wire body for the chat-completions subset: one optional system message and
// one user message whose content lists the image parts then the text part.
nlohmann::json chat_request_body(const EndpointConfig& cfg, const ChatRequest& request);

struct Caption {
    std::string video_id;
    AspectKind aspect = AspectKind::General;
    std::string query_text;
    std::string caption_text;
    std::string model_name;
    std::optional<int> token_count;
    std::string created_at;
};

void to_json(nlohmann::json& j, const Caption& c);
void from_json(const nlohmann::json& j, Caption& c);

// Single-video captioning; throws InferError on delivery/endpoint/empty
// failures. `frame_data_urls` must follow the plan's timestamp order.
Caption generate_caption(const EndpointConfig& cfg, const VideoRecord& video,
                         const FrameSamplePlan& plan, const AspectQuery& query,
                         const std::vector<std::string>& frame_data_urls,
                         std::string_view registry_version);

}  // namespace vpair
