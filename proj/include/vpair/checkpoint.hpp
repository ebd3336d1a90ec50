#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace vpair {

// One completed (or permanently failed) request, persisted before the job
// is considered done.
struct CheckpointRecord {
    std::string key;
    bool ok = false;
    std::string content;  // assistant message text on success
    std::string error;    // failure detail otherwise
    int http_status = 0;
    int attempts = 0;
    std::optional<int> completion_tokens;
    std::string created_at;
    nlohmann::json meta;  // caller payload, round-tripped untouched
};

void to_json(nlohmann::json& j, const CheckpointRecord& r);
void from_json(const nlohmann::json& j, CheckpointRecord& r);

// Append-only line-delimited store keyed by request_key. Loading tolerates a
// truncated final line (interrupted writer); appends are serialized and
// flushed per record.
class CheckpointStore {
public:
    explicit CheckpointStore(std::filesystem::path path);

    bool contains(const std::string& key) const;
    std::optional<CheckpointRecord> get(const std::string& key) const;

    // Throws ConflictError on duplicate key, Error on write failure.
    void append(const CheckpointRecord& record);

    std::size_t size() const;
    std::vector<CheckpointRecord> records_sorted() const;  // by key
    const std::filesystem::path& path() const { return path_; }

private:
    mutable std::mutex mu_;
    std::filesystem::path path_;
    std::map<std::string, CheckpointRecord> records_;
    std::ofstream out_;
};

}  // namespace vpair
