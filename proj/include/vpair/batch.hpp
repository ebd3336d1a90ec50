#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vpair/checkpoint.hpp"
#include "vpair/infer_client.hpp"

namespace vpair {

struct BatchJob {
    ChatRequest request;
    nlohmann::json meta;  // stored on the checkpoint record verbatim
};

struct BatchReport {
    int succeeded = 0;
    int failed = 0;
    int skipped = 0;
    int max_in_flight = 0;  // client-side gauge
    std::vector<std::string> failed_keys;

    int total() const { return succeeded + failed + skipped; }
};

// Runs jobs against the endpoint with at most cfg.max_parallel in flight.
// Jobs whose key already exists in the sink are skipped; every completed job
// is persisted before it counts as done. Individual failures are recorded;
// a sink write failure aborts the batch.
BatchReport run_batch(const EndpointConfig& cfg, const std::vector<BatchJob>& jobs,
                      CheckpointStore& sink);

}  // namespace vpair
