#include "vpair/checkpoint.hpp"

#include "vpair/errors.hpp"
#include "vpair/util.hpp"

namespace vpair {

using nlohmann::json;

void to_json(json& j, const CheckpointRecord& r) {
    j = json{{"key", r.key},
             {"ok", r.ok},
             {"content", r.content},
             {"error", r.error},
             {"http_status", r.http_status},
             {"attempts", r.attempts},
             {"created_at", r.created_at},
             {"meta", r.meta}};
    if (r.completion_tokens) j["completion_tokens"] = *r.completion_tokens;
}

void from_json(const json& j, CheckpointRecord& r) {
    r.key = j.at("key").get<std::string>();
    r.ok = j.at("ok").get<bool>();
    r.content = j.value("content", std::string());
    r.error = j.value("error", std::string());
    r.http_status = j.value("http_status", 0);
    r.attempts = j.value("attempts", 0);
    r.created_at = j.value("created_at", std::string());
    r.meta = j.contains("meta") ? j["meta"] : json();
    r.completion_tokens.reset();
    if (j.contains("completion_tokens") && !j["completion_tokens"].is_null()) {
        r.completion_tokens = j["completion_tokens"].get<int>();
    }
}

CheckpointStore::CheckpointStore(std::filesystem::path path) : path_(std::move(path)) {
    namespace fs = std::filesystem;
    if (path_.has_parent_path()) {
        fs::create_directories(path_.parent_path());
    }
    if (fs::exists(path_)) {
        for (const auto& line : split_lines(read_text_file(path_))) {
            if (trim(line).empty()) continue;
            try {
                auto rec = json::parse(line).get<CheckpointRecord>();
                records_[rec.key] = std::move(rec);
            } catch (const json::exception&) {
                // Interrupted append; the record was never acknowledged.
                continue;
            }
        }
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) {
        throw Error("checkpoint store: cannot open for append: " + path_.string());
    }
}

bool CheckpointStore::contains(const std::string& key) const {
    std::lock_guard lock(mu_);
    return records_.count(key) > 0;
}

std::optional<CheckpointRecord> CheckpointStore::get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(key);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void CheckpointStore::append(const CheckpointRecord& record) {
    std::lock_guard lock(mu_);
    if (records_.count(record.key)) {
        throw ConflictError("checkpoint store: duplicate key \"" + record.key + "\"");
    }
    json j = record;
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) {
        throw Error("checkpoint store: write failed: " + path_.string());
    }
    records_[record.key] = record;
}

std::size_t CheckpointStore::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

std::vector<CheckpointRecord> CheckpointStore::records_sorted() const {
    std::lock_guard lock(mu_);
    std::vector<CheckpointRecord> out;
    out.reserve(records_.size());
    for (const auto& [key, rec] : records_) {
        out.push_back(rec);
    }
    return out;
}

}  // namespace vpair
