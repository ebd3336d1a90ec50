#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vpair {

// 64-bit FNV-1a. Stable across platforms and runs; used for request keys
// and content-derived version stamps, never for anything adversarial.
std::uint64_t fnv1a64(std::string_view data);

std::string hex64(std::uint64_t value);

// First 8 hex chars of fnv1a64(data).
std::string short_hash(std::string_view data);

std::string base64_encode(std::string_view data);

// Anchored glob over the whole text; '*' matches any run, '?' one char.
bool glob_match(std::string_view pattern, std::string_view text);

std::string trim(std::string_view s);

// Splits on '\n', tolerating trailing '\r'. A trailing newline does not
// produce an empty final element.
std::vector<std::string> split_lines(std::string_view text);

// Key components may not contain the ':' separator or whitespace.
std::string sanitize_key_component(std::string_view s);

std::string read_text_file(const std::filesystem::path& path);

std::string read_binary_file(const std::filesystem::path& path);

// Write-to-temp-then-rename so readers never observe a half-written file.
void atomic_write_text_file(const std::filesystem::path& path, std::string_view content);

std::string iso8601_utc_now();

}  // namespace vpair
