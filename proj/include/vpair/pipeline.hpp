#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vpair/batch.hpp"
#include "vpair/corpus.hpp"
#include "vpair/exporter.hpp"
#include "vpair/pair_forge.hpp"
#include "vpair/run_config.hpp"

namespace vpair {

// Stage artifacts inside one run directory.
struct RunPaths {
    std::filesystem::path run_dir;

    std::filesystem::path videos() const { return run_dir / "videos.jsonl"; }
    std::filesystem::path caption_ckpt() const { return run_dir / "captions.ckpt.jsonl"; }
    std::filesystem::path captions() const { return run_dir / "captions.jsonl"; }
    std::filesystem::path judge_ckpt() const { return run_dir / "judge.ckpt.jsonl"; }
    std::filesystem::path scores() const { return run_dir / "scores.jsonl"; }
    std::filesystem::path judge_audit() const { return run_dir / "judge_audit.jsonl"; }
    std::filesystem::path pairs() const { return run_dir / "pairs.jsonl"; }
    std::filesystem::path run_stats() const { return run_dir / "run_stats.json"; }
    std::filesystem::path export_dir() const { return run_dir / "export"; }
    std::filesystem::path dataset() const { return export_dir() / "dataset.jsonl"; }
    std::filesystem::path export_manifest() const { return export_dir() / "manifest.json"; }
    std::filesystem::path ablation(AspectKind aspect) const {
        return export_dir() / ("ablation_" + std::string(aspect_name(aspect)) + ".jsonl");
    }
    std::filesystem::path lock() const { return run_dir / ".lock"; }
};

// One process owns a run_dir at a time.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& run_dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path lock_path_;
};

// A video with its sampling plan, as persisted by the ingest stage.
struct PlannedVideo {
    VideoRecord record;
    FrameSamplePlan plan;
};

void to_json(nlohmann::json& j, const PlannedVideo& v);
void from_json(const nlohmann::json& j, PlannedVideo& v);

struct IngestSummary {
    int loaded = 0;
    int excluded = 0;
    int planned = 0;
};

IngestSummary stage_ingest(const RunConfig& cfg, std::ostream& log);

BatchReport stage_caption(const RunConfig& cfg, std::ostream& log);

struct JudgeSummary {
    BatchReport batch;
    int scored = 0;
    int dropped = 0;
};

JudgeSummary stage_judge(const RunConfig& cfg, std::ostream& log);

struct PairSummary {
    RunStats stats;
    int retained_total = 0;
};

PairSummary stage_pair(const RunConfig& cfg, std::ostream& log);

ExportManifest stage_export(const RunConfig& cfg, std::ostream& log);

int stage_export_ablation(const RunConfig& cfg, AspectKind aspect, std::ostream& log);

void stage_report(const RunConfig& cfg, std::ostream& out);

struct RunOutcome {
    // Requests recorded as permanently failed in the stage checkpoints for
    // the current prompt/principle versions. Artifacts are still written
    // (and resumable); a nonzero count means the run is not a full success.
    int failed_requests = 0;
};

// ingest -> caption -> judge -> pair -> export -> report.
RunOutcome run_all(const RunConfig& cfg, std::ostream& log);

// Shared loaders for stage artifacts (throw StageOrderError when the
// predecessor stage has not produced its file yet).
std::vector<PlannedVideo> load_videos_artifact(const RunPaths& paths);
std::vector<Caption> load_captions_artifact(const RunPaths& paths);
std::vector<CaptionScore> load_scores_artifact(const RunPaths& paths);
std::vector<PreferencePair> load_pairs_artifact(const RunPaths& paths);

}  // namespace vpair
