#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vpair {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input line; message carries the line number.
struct ParseError : Error {
    using Error::Error;
};

// Duplicate key within a store or manifest.
struct ConflictError : Error {
    using Error::Error;
};

// Frame plan cannot be computed (unknown duration, no frame directory).
struct PlanError : Error {
    using Error::Error;
};

// Numeric-domain violation (positive logprob, token id out of range, ...).
struct DomainError : Error {
    using Error::Error;
};

struct ExportError : Error {
    using Error::Error;
};

// A pipeline stage was invoked before its predecessor produced its artifact.
struct StageOrderError : Error {
    StageOrderError(const std::string& what, std::string missing)
        : Error(what), missing_path(std::move(missing)) {}
    std::string missing_path;
};

// Carries every violation found, not just the first.
struct ConfigError : Error {
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), violations(std::move(problems)) {}
    std::vector<std::string> violations;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string msg = "invalid configuration:";
        for (const auto& p : v) {
            msg += "\n  - " + p;
        }
        return msg;
    }
};

enum class InferFailure {
    transport,       // could not deliver after retries
    endpoint,        // non-retryable HTTP error status
    empty_response,  // 2xx but no usable message content
};

struct InferError : Error {
    InferError(InferFailure k, const std::string& what, int status = 0, int tries = 0)
        : Error(what), kind(k), http_status(status), attempts(tries) {}
    InferFailure kind;
    int http_status;
    int attempts;
};

}  // namespace vpair
