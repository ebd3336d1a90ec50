#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpair/corpus.hpp"
#include "vpair/infer_client.hpp"
#include "vpair/pair_forge.hpp"

namespace vpair {

struct ExportManifest {
    std::string run_id;
    std::map<std::string, int> pair_count;  // per aspect name
    int delta = 0;
    double beta_recommended = 0.1;
    std::string registry_version;
    std::string principles_version;
    std::string source_dataset;
};

void to_json(nlohmann::json& j, const ExportManifest& m);
void from_json(const nlohmann::json& j, ExportManifest& m);

struct ExportContext {
    std::string run_id;
    int delta = 0;
    double beta_recommended = 0.1;
    std::string registry_version;
    std::string principles_version;
    std::string source_dataset;
};

// Writes one dataset record per pair — media reference list in plan order, a
// single user turn with the base query, the chosen and rejected responses —
// sorted by (aspect, video_id), plus the manifest alongside. Every
// referenced frame file must exist under frames_root.
ExportManifest export_dpo_dataset(const std::vector<PreferencePair>& pairs,
                                  const std::map<std::string, FrameSamplePlan>& plans,
                                  const std::filesystem::path& frames_root,
                                  const std::filesystem::path& out_dir,
                                  const ExportContext& ctx);

// Re-parses an exported dataset file back into pairs (the round-trip
// inverse of export_dpo_dataset's record schema).
std::vector<PreferencePair> parse_dpo_dataset(const std::filesystem::path& dataset_file);

// Writes (video_id, query_text, caption_text) for every caption of one
// aspect: the inference-time prompt-only condition. Returns the record count.
int export_ablation_captions(const std::vector<Caption>& captions, AspectKind aspect,
                             const std::filesystem::path& out_file);

}  // namespace vpair
