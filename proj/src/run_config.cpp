#include "vpair/run_config.hpp"

#include <cmath>

#include "vpair/errors.hpp"
#include "vpair/util.hpp"

namespace vpair {

using nlohmann::json;

namespace {

EndpointConfig endpoint_from_json(const json& j) {
    EndpointConfig e;
    e.base_url = j.value("base_url", std::string());
    e.model_name = j.value("model", j.value("model_name", std::string()));
    e.api_key_env = j.value("api_key_env", std::string());
    e.timeout_s = j.value("timeout_s", 30.0);
    e.max_retries = j.value("max_retries", 3);
    e.max_parallel = j.value("max_parallel", 4);
    e.temperature = j.value("temperature", 0.0);
    e.max_output_tokens = j.value("max_output_tokens", 1024);
    e.retry_base_s = j.value("retry_base_s", 0.1);
    e.retry_cap_s = j.value("retry_cap_s", 2.0);
    return e;
}

json endpoint_to_json(const EndpointConfig& e) {
    return json{{"base_url", e.base_url},
                {"model", e.model_name},
                {"api_key_env", e.api_key_env},
                {"timeout_s", e.timeout_s},
                {"max_retries", e.max_retries},
                {"max_parallel", e.max_parallel},
                {"temperature", e.temperature},
                {"max_output_tokens", e.max_output_tokens},
                {"retry_base_s", e.retry_base_s},
                {"retry_cap_s", e.retry_cap_s}};
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    cfg.run_dir = j.value("run_dir", std::string("run"));
    cfg.manifest = j.value("manifest", std::string());
    cfg.blocklist = j.value("blocklist", std::string());
    cfg.frames_root = j.value("frames_root", std::string("frames"));
    cfg.frame_extractor_cmd = j.value("frame_extractor_cmd", std::string());
    cfg.run_id = j.value("run_id", std::string("run"));
    cfg.source_dataset = j.value("source_dataset", std::string());

    PromptRegistry defaults = default_prompt_registry();
    if (j.contains("prompts")) {
        const json& p = j["prompts"];
        cfg.prompts.base_query = p.value("base", defaults.base_query);
        cfg.prompts.temporal_prompt = p.value("temporal", defaults.temporal_prompt);
        cfg.prompts.spatial_prompt = p.value("spatial", defaults.spatial_prompt);
        cfg.prompts.separator = p.value("separator", defaults.separator);
        cfg.prompts.registry_version = p.value("version", std::string());
    } else {
        cfg.prompts = defaults;
    }
    cfg.prompts = finalize(cfg.prompts);

    ScoringPrinciples principle_defaults = default_scoring_principles();
    if (j.contains("judge")) {
        const json& p = j["judge"];
        cfg.principles.principles_text = p.value("principles", principle_defaults.principles_text);
        cfg.principles.scale_min = p.value("scale_min", principle_defaults.scale_min);
        cfg.principles.scale_max = p.value("scale_max", principle_defaults.scale_max);
        cfg.principles.principles_version = p.value("version", std::string());
        if (p.contains("endpoint")) cfg.judge_endpoint = endpoint_from_json(p["endpoint"]);
    } else {
        cfg.principles = principle_defaults;
    }
    cfg.principles = finalize(cfg.principles);

    if (j.contains("generator")) cfg.generator = endpoint_from_json(j["generator"]);

    cfg.delta = j.value("delta", 5);
    cfg.target_fps = j.value("target_fps", 2.0);
    cfg.max_frames = j.value("max_frames", 32);
    cfg.beta_recommended = j.value("beta_recommended", 0.1);
    return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
    return json{
        {"run_dir", cfg.run_dir.string()},
        {"manifest", cfg.manifest.string()},
        {"blocklist", cfg.blocklist.string()},
        {"frames_root", cfg.frames_root.string()},
        {"frame_extractor_cmd", cfg.frame_extractor_cmd},
        {"run_id", cfg.run_id},
        {"source_dataset", cfg.source_dataset},
        {"prompts",
         {{"base", cfg.prompts.base_query},
          {"temporal", cfg.prompts.temporal_prompt},
          {"spatial", cfg.prompts.spatial_prompt},
          {"separator", cfg.prompts.separator},
          {"version", cfg.prompts.registry_version}}},
        {"judge",
         {{"principles", cfg.principles.principles_text},
          {"scale_min", cfg.principles.scale_min},
          {"scale_max", cfg.principles.scale_max},
          {"version", cfg.principles.principles_version},
          {"endpoint", endpoint_to_json(cfg.judge_endpoint)}}},
        {"generator", endpoint_to_json(cfg.generator)},
        {"delta", cfg.delta},
        {"target_fps", cfg.target_fps},
        {"max_frames", cfg.max_frames},
        {"beta_recommended", cfg.beta_recommended}};
}

void apply_override(json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError({"override \"" + assignment + "\" is not of the form key=value"});
    }
    std::string path = assignment.substr(0, eq);
    std::string value = assignment.substr(eq + 1);

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        auto dot = path.find('.', start);
        std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) {
            throw ConfigError({"override \"" + assignment + "\" has an empty path segment"});
        }
        if (dot == std::string::npos) {
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::exception&) {
                parsed = value;  // plain string
            }
            (*node)[part] = parsed;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::vector<std::string> run_config_problems(const RunConfig& cfg, bool check_files) {
    namespace fs = std::filesystem;
    std::vector<std::string> problems;

    if (cfg.run_dir.empty()) problems.push_back("run_dir is empty");
    if (cfg.manifest.empty()) problems.push_back("manifest path is empty");
    if (check_files && !cfg.manifest.empty() && !fs::exists(cfg.manifest)) {
        problems.push_back("manifest does not exist: " + cfg.manifest.string());
    }
    if (check_files && !cfg.blocklist.empty() && !fs::exists(cfg.blocklist)) {
        problems.push_back("blocklist does not exist: " + cfg.blocklist.string());
    }

    if (cfg.prompts.base_query.empty()) problems.push_back("prompts.base is empty");
    if (cfg.prompts.temporal_prompt.empty()) problems.push_back("prompts.temporal is empty");
    if (cfg.prompts.spatial_prompt.empty()) problems.push_back("prompts.spatial is empty");

    if (cfg.principles.principles_text.empty()) problems.push_back("judge.principles is empty");
    if (cfg.principles.scale_min >= cfg.principles.scale_max) {
        problems.push_back("judge scale_min must be < scale_max");
    }

    for (const auto& p : endpoint_config_problems(cfg.generator, "generator")) {
        problems.push_back(p);
    }
    for (const auto& p : endpoint_config_problems(cfg.judge_endpoint, "judge.endpoint")) {
        problems.push_back(p);
    }

    if (cfg.delta < 0) problems.push_back("delta must be >= 0");
    if (!(cfg.target_fps > 0.0) || cfg.target_fps > 1000.0) {
        problems.push_back("target_fps must be in (0, 1000]");
    }
    if (cfg.max_frames < 1) problems.push_back("max_frames must be >= 1");
    if (!(cfg.beta_recommended > 0.0)) problems.push_back("beta_recommended must be > 0");
    return problems;
}

void validate_run_config(const RunConfig& cfg, bool check_files) {
    auto problems = run_config_problems(cfg, check_files);
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
}

RunConfig load_run_config(const std::filesystem::path& config_path,
                          const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = json::parse(read_text_file(config_path));
    } catch (const json::exception& e) {
        throw ConfigError({std::string("config parse error: ") + e.what()});
    }
    for (const auto& assignment : overrides) {
        apply_override(doc, assignment);
    }
    RunConfig cfg = run_config_from_json(doc);
    validate_run_config(cfg);
    return cfg;
}

}  // namespace vpair
