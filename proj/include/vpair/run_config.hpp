#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpair/infer_client.hpp"
#include "vpair/judge.hpp"
#include "vpair/prompts.hpp"

namespace vpair {

struct RunConfig {
    std::filesystem::path run_dir;
    std::filesystem::path manifest;
    std::filesystem::path blocklist;  // optional; empty = none
    std::filesystem::path frames_root;
    std::string frame_extractor_cmd;
    std::string run_id = "run";
    std::string source_dataset;

    PromptRegistry prompts;
    ScoringPrinciples principles;
    EndpointConfig generator;
    EndpointConfig judge_endpoint;

    int delta = 5;
    double target_fps = 2.0;
    int max_frames = 32;
    double beta_recommended = 0.1;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);

// Applies "--set a.b.c=value" overrides onto the raw config document. Values
// parse as JSON when possible and fall back to strings.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Loads, applies overrides, fills derived versions, validates. Throws
// ConfigError listing every violation.
RunConfig load_run_config(const std::filesystem::path& config_path,
                          const std::vector<std::string>& overrides = {});

// Every violation found, empty when valid. `check_files` also requires the
// referenced input files to exist.
std::vector<std::string> run_config_problems(const RunConfig& cfg, bool check_files = true);

void validate_run_config(const RunConfig& cfg, bool check_files = true);

}  // namespace vpair
