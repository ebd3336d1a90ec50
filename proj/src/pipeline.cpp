#include "vpair/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>

#include <unistd.h>

#include "vpair/frames.hpp"
#include "vpair/jsonl.hpp"

namespace vpair {

namespace fs = std::filesystem;
using nlohmann::json;

RunLock::RunLock(const fs::path& run_dir) {
    fs::create_directories(run_dir);
    lock_path_ = run_dir / ".lock";
    std::FILE* f = std::fopen(lock_path_.string().c_str(), "wx");
    if (!f) {
        throw Error("run_dir is locked by another process (remove " + lock_path_.string() +
                    " if that process is gone)");
    }
    std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
    std::fclose(f);
}

RunLock::~RunLock() {
    std::error_code ec;
    fs::remove(lock_path_, ec);
}

void to_json(json& j, const PlannedVideo& v) {
    j = json{{"record", v.record}, {"plan", v.plan}};
}

void from_json(const json& j, PlannedVideo& v) {
    v.record = j.at("record").get<VideoRecord>();
    v.plan = j.at("plan").get<FrameSamplePlan>();
}

namespace {

void require_artifact(const fs::path& path, const std::string& producing_stage) {
    if (!fs::exists(path)) {
        throw StageOrderError("missing artifact " + path.string() + "; run the \"" +
                                  producing_stage + "\" stage first",
                              path.string());
    }
}

FrameSource frame_source_of(const RunConfig& cfg) {
    return FrameSource{cfg.frames_root, cfg.frame_extractor_cmd};
}

// Caption-side meta stored on checkpoint records so the derived caption file
// can be rebuilt from the checkpoint alone.
json caption_meta(const Caption& skeleton, const std::string& registry_version) {
    return json{{"kind", "caption"},
                {"video_id", skeleton.video_id},
                {"aspect", aspect_name(skeleton.aspect)},
                {"query_text", skeleton.query_text},
                {"model_name", skeleton.model_name},
                {"registry_version", registry_version}};
}

}  // namespace

std::vector<PlannedVideo> load_videos_artifact(const RunPaths& paths) {
    require_artifact(paths.videos(), "ingest");
    return read_jsonl<PlannedVideo>(paths.videos());
}

std::vector<Caption> load_captions_artifact(const RunPaths& paths) {
    require_artifact(paths.captions(), "caption");
    return read_jsonl<Caption>(paths.captions());
}

std::vector<CaptionScore> load_scores_artifact(const RunPaths& paths) {
    require_artifact(paths.scores(), "judge");
    return read_jsonl<CaptionScore>(paths.scores());
}

std::vector<PreferencePair> load_pairs_artifact(const RunPaths& paths) {
    require_artifact(paths.pairs(), "pair");
    return read_jsonl<PreferencePair>(paths.pairs());
}

IngestSummary stage_ingest(const RunConfig& cfg, std::ostream& log) {
    RunPaths paths{cfg.run_dir};
    fs::create_directories(cfg.run_dir);

    std::vector<VideoRecord> records = load_manifest_file(cfg.manifest);
    IngestSummary summary;
    summary.loaded = static_cast<int>(records.size());

    if (!cfg.blocklist.empty()) {
        Blocklist blocklist = load_blocklist_file(cfg.blocklist);
        OverlapFilterResult filtered = filter_eval_overlap(records, blocklist);
        summary.excluded = filtered.removed;
        records = std::move(filtered.kept);
    }

    FrameSource source = frame_source_of(cfg);
    std::vector<PlannedVideo> planned;
    planned.reserve(records.size());
    for (const auto& record : records) {
        std::optional<fs::path> frame_dir;
        fs::path dir = frame_dir_for(source, record);
        if (fs::is_directory(dir)) frame_dir = dir;
        PlannedVideo pv;
        pv.record = record;
        pv.plan = plan_frames(record, cfg.target_fps, cfg.max_frames, frame_dir);
        planned.push_back(std::move(pv));
    }
    summary.planned = static_cast<int>(planned.size());

    write_jsonl(paths.videos(), planned);
    log << "ingest: " << summary.loaded << " loaded, " << summary.excluded << " excluded, "
        << summary.planned << " planned -> " << paths.videos().string() << "\n";
    return summary;
}

BatchReport stage_caption(const RunConfig& cfg, std::ostream& log) {
    RunPaths paths{cfg.run_dir};
    std::vector<PlannedVideo> videos = load_videos_artifact(paths);

    CheckpointStore sink(paths.caption_ckpt());
    FrameSource source = frame_source_of(cfg);

    std::vector<BatchJob> jobs;
    for (const auto& video : videos) {
        std::vector<std::string> frames;  // loaded lazily, shared across aspects
        for (AspectKind aspect : kAllAspects) {
            AspectQuery query = compose_query(cfg.prompts, aspect);
            BatchJob job;
            job.request.request_key = make_request_key("cap", video.record.video_id, aspect,
                                                       cfg.prompts.registry_version);
            job.request.user_text = query.composed_text;

            Caption skeleton;
            skeleton.video_id = video.record.video_id;
            skeleton.aspect = aspect;
            skeleton.query_text = query.composed_text;
            skeleton.model_name = cfg.generator.model_name;
            job.meta = caption_meta(skeleton, cfg.prompts.registry_version);

            if (!sink.contains(job.request.request_key)) {
                if (frames.empty()) {
                    fs::path dir = ensure_frames(source, video.record, video.plan);
                    frames = load_frame_data_urls(dir, video.plan);
                }
                job.request.image_data_urls = frames;
            }
            jobs.push_back(std::move(job));
        }
    }

    BatchReport report = run_batch(cfg.generator, jobs, sink);

    // Derive the caption table from the checkpoint; stale registry versions
    // are ignored so a prompt change cannot mix generations.
    std::vector<Caption> captions;
    for (const auto& rec : sink.records_sorted()) {
        if (!rec.ok || !rec.meta.is_object()) continue;
        if (rec.meta.value("kind", std::string()) != "caption") continue;
        if (rec.meta.value("registry_version", std::string()) != cfg.prompts.registry_version) {
            continue;
        }
        Caption caption;
        caption.video_id = rec.meta.at("video_id").get<std::string>();
        caption.aspect = *aspect_from_name(rec.meta.at("aspect").get<std::string>());
        caption.query_text = rec.meta.at("query_text").get<std::string>();
        caption.caption_text = rec.content;
        caption.model_name = rec.meta.value("model_name", std::string());
        caption.token_count = rec.completion_tokens;
        caption.created_at = rec.created_at;
        captions.push_back(std::move(caption));
    }
    std::stable_sort(captions.begin(), captions.end(), [](const Caption& a, const Caption& b) {
        if (a.video_id != b.video_id) return a.video_id < b.video_id;
        return aspect_name(a.aspect) < aspect_name(b.aspect);
    });
    write_jsonl(paths.captions(), captions);

    log << "caption: " << report.succeeded << " succeeded, " << report.failed << " failed, "
        << report.skipped << " skipped; " << captions.size() << " captions -> "
        << paths.captions().string() << "\n";
    return report;
}

namespace {

std::string judge_key_version(const RunConfig& cfg) {
    return cfg.prompts.registry_version + "|" + cfg.principles.principles_version;
}

}  // namespace

JudgeSummary stage_judge(const RunConfig& cfg, std::ostream& log) {
    RunPaths paths{cfg.run_dir};
    std::vector<PlannedVideo> videos = load_videos_artifact(paths);
    std::vector<Caption> captions = load_captions_artifact(paths);

    std::map<std::string, const PlannedVideo*> by_id;
    for (const auto& v : videos) by_id[v.record.video_id] = &v;

    CheckpointStore sink(paths.judge_ckpt());
    FrameSource source = frame_source_of(cfg);
    std::map<std::string, std::vector<std::string>> frame_cache;

    auto frames_for = [&](const PlannedVideo& video) -> const std::vector<std::string>& {
        auto it = frame_cache.find(video.record.video_id);
        if (it == frame_cache.end()) {
            fs::path dir = ensure_frames(source, video.record, video.plan);
            it = frame_cache
                     .emplace(video.record.video_id, load_frame_data_urls(dir, video.plan))
                     .first;
        }
        return it->second;
    };

    auto judge_job = [&](const Caption& caption, const PlannedVideo& video,
                         const std::string& key_suffix) {
        AspectQuery query = compose_query(cfg.prompts, caption.aspect);
        BatchJob job;
        // build_judge_request folds the principles version into the key itself.
        ChatRequest base = build_judge_request(cfg.principles, video.record, video.plan, query,
                                               caption, {}, cfg.prompts.registry_version);
        job.request = std::move(base);
        job.request.request_key += key_suffix;
        job.meta = json{{"kind", "judge"},
                        {"video_id", caption.video_id},
                        {"aspect", aspect_name(caption.aspect)},
                        {"registry_version", cfg.prompts.registry_version},
                        {"principles_version", cfg.principles.principles_version}};
        if (!sink.contains(job.request.request_key)) {
            job.request.image_data_urls = frames_for(video);
        }
        return job;
    };

    auto primary_key = [&](const Caption& caption) {
        return make_request_key("judge", caption.video_id, caption.aspect,
                                judge_key_version(cfg));
    };

    std::vector<BatchJob> jobs;
    for (const auto& caption : captions) {
        auto it = by_id.find(caption.video_id);
        if (it == by_id.end()) {
            throw Error("judge: caption for unknown video \"" + caption.video_id + "\"");
        }
        jobs.push_back(judge_job(caption, *it->second, ""));
    }
    BatchReport report = run_batch(cfg.judge_endpoint, jobs, sink);

    // One re-judge for captions whose verdict did not parse.
    std::vector<BatchJob> retries;
    for (const auto& caption : captions) {
        auto rec = sink.get(primary_key(caption));
        if (!rec || !rec->ok) continue;
        if (parse_score(rec->content, cfg.principles).status == ScoreParseStatus::ok) continue;
        retries.push_back(judge_job(caption, *by_id.at(caption.video_id), ":r1"));
    }
    if (!retries.empty()) {
        BatchReport retry_report = run_batch(cfg.judge_endpoint, retries, sink);
        report.succeeded += retry_report.succeeded;
        report.failed += retry_report.failed;
        report.skipped += retry_report.skipped;
        report.max_in_flight = std::max(report.max_in_flight, retry_report.max_in_flight);
    }

    // Every caption resolves to exactly one score or one audit drop.
    std::vector<CaptionScore> scores;
    std::vector<AuditDrop> audits;
    for (const auto& caption : captions) {
        auto rec = sink.get(primary_key(caption));
        AuditDrop drop;
        drop.video_id = caption.video_id;
        drop.aspect = caption.aspect;
        if (!rec) {
            drop.reason = "endpoint_failure";
            drop.detail = "no judge response recorded";
            audits.push_back(std::move(drop));
            continue;
        }
        auto score_of = [&](const CheckpointRecord& r) {
            CaptionScore s;
            s.video_id = caption.video_id;
            s.aspect = caption.aspect;
            s.score = parse_score(r.content, cfg.principles).score;
            s.raw_judge_text = r.content;
            s.judge_model = cfg.judge_endpoint.model_name;
            s.principles_version = cfg.principles.principles_version;
            return s;
        };
        if (!rec->ok) {
            drop.reason = "endpoint_failure";
            drop.detail = rec->error;
            audits.push_back(std::move(drop));
            continue;
        }
        ScoreParseResult first = parse_score(rec->content, cfg.principles);
        if (first.status == ScoreParseStatus::ok) {
            scores.push_back(score_of(*rec));
            continue;
        }
        auto retry = sink.get(primary_key(caption) + ":r1");
        if (retry && retry->ok) {
            ScoreParseResult second = parse_score(retry->content, cfg.principles);
            if (second.status == ScoreParseStatus::ok) {
                scores.push_back(score_of(*retry));
                continue;
            }
            drop.reason = second.status == ScoreParseStatus::out_of_range ? "score_out_of_range"
                                                                          : "unparseable_score";
            drop.detail = "judge said: " + retry->content;
        } else if (retry && !retry->ok) {
            drop.reason = "endpoint_failure";
            drop.detail = "re-judge delivery failed: " + retry->error;
        } else {
            drop.reason = first.status == ScoreParseStatus::out_of_range ? "score_out_of_range"
                                                                         : "unparseable_score";
            drop.detail = "judge said: " + rec->content;
        }
        audits.push_back(std::move(drop));
    }

    write_jsonl(paths.scores(), scores);
    write_jsonl(paths.judge_audit(), audits);

    JudgeSummary summary;
    summary.batch = report;
    summary.scored = static_cast<int>(scores.size());
    summary.dropped = static_cast<int>(audits.size());
    log << "judge: " << summary.scored << " scored, " << summary.dropped << " dropped -> "
        << paths.scores().string() << "\n";
    return summary;
}

PairSummary stage_pair(const RunConfig& cfg, std::ostream& log) {
    RunPaths paths{cfg.run_dir};
    std::vector<Caption> captions = load_captions_artifact(paths);
    std::vector<CaptionScore> scores = load_scores_artifact(paths);

    std::map<AspectKind, AssembleResult> assembled;
    std::map<AspectKind, PairFilterResult> filtered;
    std::vector<PreferencePair> all_pairs;
    for (AspectKind aspect : kPairedAspects) {
        assembled[aspect] = assemble_candidates(captions, scores, aspect);
        filtered[aspect] =
            filter_pairs(assembled[aspect].candidates, cfg.delta, cfg.prompts.base_query,
                         cfg.prompts.registry_version, cfg.principles.principles_version);
        for (const auto& pair : filtered[aspect].retained) {
            all_pairs.push_back(pair);
        }
    }
    std::stable_sort(all_pairs.begin(), all_pairs.end(),
              [](const PreferencePair& a, const PreferencePair& b) {
                  if (a.aspect != b.aspect) return aspect_name(a.aspect) < aspect_name(b.aspect);
                  return a.video_id < b.video_id;
              });

    RunStats stats = summarize_run(assembled, filtered, cfg.delta);
    write_jsonl(paths.pairs(), all_pairs);
    json stats_json = stats;
    atomic_write_text_file(paths.run_stats(), stats_json.dump(2) + "\n");

    PairSummary summary;
    summary.stats = stats;
    summary.retained_total = static_cast<int>(all_pairs.size());
    log << "pair: " << summary.retained_total << " retained at delta " << cfg.delta << " -> "
        << paths.pairs().string() << "\n";
    return summary;
}

ExportManifest stage_export(const RunConfig& cfg, std::ostream& log) {
    RunPaths paths{cfg.run_dir};
    std::vector<PreferencePair> pairs = load_pairs_artifact(paths);
    require_artifact(paths.run_stats(), "pair");
    std::vector<PlannedVideo> videos = load_videos_artifact(paths);

    std::map<std::string, FrameSamplePlan> plans;
    for (const auto& v : videos) plans[v.record.video_id] = v.plan;

    ExportContext ctx;
    ctx.run_id = cfg.run_id;
    ctx.delta = cfg.delta;
    ctx.beta_recommended = cfg.beta_recommended;
    ctx.registry_version = cfg.prompts.registry_version;
    ctx.principles_version = cfg.principles.principles_version;
    ctx.source_dataset = cfg.source_dataset;

    ExportManifest manifest =
        export_dpo_dataset(pairs, plans, cfg.frames_root, paths.export_dir(), ctx);

    RunStats stats = json::parse(read_text_file(paths.run_stats())).get<RunStats>();
    for (const auto& [aspect, count] : manifest.pair_count) {
        auto it = stats.aspects.find(aspect);
        int expected = it == stats.aspects.end() ? 0 : it->second.retained;
        if (count != expected) {
            throw ExportError("export: manifest count for " + aspect + " (" +
                              std::to_string(count) + ") disagrees with run stats (" +
                              std::to_string(expected) + ")");
        }
    }

    log << "export: " << pairs.size() << " pairs -> " << paths.dataset().string() << "\n";
    return manifest;
}

int stage_export_ablation(const RunConfig& cfg, AspectKind aspect, std::ostream& log) {
    RunPaths paths{cfg.run_dir};
    std::vector<Caption> captions = load_captions_artifact(paths);
    int count = export_ablation_captions(captions, aspect, paths.ablation(aspect));
    log << "export-ablation: " << count << " " << aspect_name(aspect) << " captions -> "
        << paths.ablation(aspect).string() << "\n";
    return count;
}

void stage_report(const RunConfig& cfg, std::ostream& out) {
    RunPaths paths{cfg.run_dir};
    require_artifact(paths.run_stats(), "pair");
    RunStats stats = json::parse(read_text_file(paths.run_stats())).get<RunStats>();

    out << "run " << cfg.run_id << " (delta " << stats.delta << ")\n";
    for (const auto& [aspect, a] : stats.aspects) {
        out << "  " << aspect << ": " << a.retained << " pairs retained of " << a.candidates
            << " candidates (" << a.dropped_by_threshold << " below threshold, "
            << a.dropped_by_judge_failure << " judge failures)\n";
        if (!a.gap_histogram.empty()) {
            out << "    score gaps:";
            for (const auto& [gap, count] : a.gap_histogram) {
                out << " " << gap << ":" << count;
            }
            out << "\n";
        }
    }
    if (fs::exists(paths.export_manifest())) {
        ExportManifest manifest =
            json::parse(read_text_file(paths.export_manifest())).get<ExportManifest>();
        int total = 0;
        for (const auto& [_, n] : manifest.pair_count) total += n;
        out << "  exported: " << total << " pairs (beta " << manifest.beta_recommended << ", "
            << manifest.registry_version << ", " << manifest.principles_version << ")\n";
    }
}

namespace {

// Failures persist in the checkpoint and are skipped on resume, so the
// per-invocation batch reports undercount them; the stores are the truth.
int count_failed_records(const fs::path& ckpt_path, const std::string& kind,
                         const std::string& registry_version,
                         const std::string& principles_version) {
    if (!fs::exists(ckpt_path)) return 0;
    CheckpointStore store(ckpt_path);
    int failed = 0;
    for (const auto& rec : store.records_sorted()) {
        if (rec.ok || !rec.meta.is_object()) continue;
        if (rec.meta.value("kind", std::string()) != kind) continue;
        if (rec.meta.value("registry_version", std::string()) != registry_version) continue;
        if (!principles_version.empty() &&
            rec.meta.value("principles_version", std::string()) != principles_version) {
            continue;
        }
        ++failed;
    }
    return failed;
}

}  // namespace

RunOutcome run_all(const RunConfig& cfg, std::ostream& log) {
    RunPaths paths{cfg.run_dir};
    stage_ingest(cfg, log);
    stage_caption(cfg, log);
    stage_judge(cfg, log);
    stage_pair(cfg, log);
    stage_export(cfg, log);
    stage_report(cfg, log);

    RunOutcome outcome;
    outcome.failed_requests =
        count_failed_records(paths.caption_ckpt(), "caption", cfg.prompts.registry_version, "") +
        count_failed_records(paths.judge_ckpt(), "judge", cfg.prompts.registry_version,
                             cfg.principles.principles_version);
    if (outcome.failed_requests > 0) {
        log << "run-all: " << outcome.failed_requests
            << " request(s) permanently failed; artifacts cover the surviving subset\n";
    }
    return outcome;
}

}  // namespace vpair
