#include "vpair/exporter.hpp"

#include <algorithm>
#include <sstream>

#include "vpair/errors.hpp"
#include "vpair/frames.hpp"
#include "vpair/util.hpp"

namespace vpair {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const ExportManifest& m) {
    int total = 0;
    json counts = json::object();
    for (const auto& [aspect, n] : m.pair_count) {
        counts[aspect] = n;
        total += n;
    }
    counts["total"] = total;
    j = json{{"run_id", m.run_id},
             {"pair_count", counts},
             {"delta", m.delta},
             {"beta_recommended", m.beta_recommended},
             {"registry_version", m.registry_version},
             {"principles_version", m.principles_version},
             {"source_dataset", m.source_dataset}};
}

void from_json(const json& j, ExportManifest& m) {
    m.run_id = j.at("run_id").get<std::string>();
    m.pair_count.clear();
    for (const auto& [aspect, n] : j.at("pair_count").items()) {
        if (aspect == "total") continue;
        m.pair_count[aspect] = n.get<int>();
    }
    m.delta = j.at("delta").get<int>();
    m.beta_recommended = j.at("beta_recommended").get<double>();
    m.registry_version = j.value("registry_version", std::string());
    m.principles_version = j.value("principles_version", std::string());
    m.source_dataset = j.value("source_dataset", std::string());
}

ExportManifest export_dpo_dataset(const std::vector<PreferencePair>& pairs,
                                  const std::map<std::string, FrameSamplePlan>& plans,
                                  const fs::path& frames_root, const fs::path& out_dir,
                                  const ExportContext& ctx) {
    std::vector<const PreferencePair*> ordered;
    ordered.reserve(pairs.size());
    for (const auto& p : pairs) ordered.push_back(&p);
    std::stable_sort(ordered.begin(), ordered.end(), [](const PreferencePair* a, const PreferencePair* b) {
        if (a->aspect != b->aspect) return aspect_name(a->aspect) < aspect_name(b->aspect);
        return a->video_id < b->video_id;
    });

    ExportManifest manifest;
    manifest.run_id = ctx.run_id;
    manifest.delta = ctx.delta;
    manifest.beta_recommended = ctx.beta_recommended;
    manifest.registry_version = ctx.registry_version;
    manifest.principles_version = ctx.principles_version;
    manifest.source_dataset = ctx.source_dataset;
    for (AspectKind aspect : kPairedAspects) {
        manifest.pair_count[std::string(aspect_name(aspect))] = 0;
    }

    std::ostringstream dataset;
    for (const PreferencePair* pair : ordered) {
        auto plan_it = plans.find(pair->video_id);
        if (plan_it == plans.end()) {
            throw ExportError("export: no frame plan for pair (" + pair->video_id + ", " +
                              std::string(aspect_name(pair->aspect)) + ")");
        }
        std::vector<std::string> media = relative_frame_paths(plan_it->second);
        for (const auto& rel : media) {
            if (!fs::exists(frames_root / rel)) {
                throw ExportError("export: missing frame file " + (frames_root / rel).string() +
                                  " for pair (" + pair->video_id + ", " +
                                  std::string(aspect_name(pair->aspect)) + ")");
            }
        }
        json record = *pair;
        record["media"] = media;
        dataset << record.dump() << '\n';
        manifest.pair_count[std::string(aspect_name(pair->aspect))] += 1;
    }

    fs::create_directories(out_dir);
    atomic_write_text_file(out_dir / "dataset.jsonl", dataset.str());
    json mj = manifest;
    atomic_write_text_file(out_dir / "manifest.json", mj.dump(2) + "\n");
    return manifest;
}

std::vector<PreferencePair> parse_dpo_dataset(const fs::path& dataset_file) {
    std::vector<PreferencePair> pairs;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(read_text_file(dataset_file))) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            pairs.push_back(json::parse(line).get<PreferencePair>());
        } catch (const json::exception& e) {
            throw ParseError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return pairs;
}

int export_ablation_captions(const std::vector<Caption>& captions, AspectKind aspect,
                             const fs::path& out_file) {
    std::vector<const Caption*> ordered;
    for (const auto& c : captions) {
        if (c.aspect == aspect) ordered.push_back(&c);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
              [](const Caption* a, const Caption* b) { return a->video_id < b->video_id; });

    std::ostringstream out;
    for (const Caption* c : ordered) {
        json record = {{"video_id", c->video_id},
                       {"query_text", c->query_text},
                       {"caption_text", c->caption_text}};
        out << record.dump() << '\n';
    }
    atomic_write_text_file(out_file, out.str());
    return static_cast<int>(ordered.size());
}

}  // namespace vpair
