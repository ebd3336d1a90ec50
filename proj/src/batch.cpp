#include "vpair/batch.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "vpair/util.hpp"

namespace vpair {

BatchReport run_batch(const EndpointConfig& cfg, const std::vector<BatchJob>& jobs,
                      CheckpointStore& sink) {
    {
        std::unordered_set<std::string> keys;
        for (const auto& job : jobs) {
            if (!keys.insert(job.request.request_key).second) {
                throw ConflictError("run_batch: duplicate request_key \"" +
                                    job.request.request_key + "\" in job list");
            }
        }
    }

    BatchReport report;
    std::mutex report_mu;
    std::atomic_size_t next{0};
    std::atomic_int in_flight{0};
    std::atomic_int max_in_flight{0};
    std::exception_ptr fatal;
    std::mutex fatal_mu;
    std::atomic_bool stop{false};

    auto worker = [&] {
        while (!stop.load()) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) break;
            const BatchJob& job = jobs[i];
            try {
                if (sink.contains(job.request.request_key)) {
                    std::lock_guard lock(report_mu);
                    ++report.skipped;
                    continue;
                }

                int now = ++in_flight;
                int seen = max_in_flight.load();
                while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
                }
                ChatOutcome outcome = send_chat(cfg, job.request);
                --in_flight;

                CheckpointRecord rec;
                rec.key = job.request.request_key;
                rec.ok = outcome.ok;
                rec.content = outcome.content;
                rec.error = outcome.error_detail;
                rec.http_status = outcome.http_status;
                rec.attempts = outcome.attempts;
                rec.completion_tokens = outcome.completion_tokens;
                rec.created_at = iso8601_utc_now();
                rec.meta = job.meta;
                sink.append(rec);  // persisted before counted as done

                std::lock_guard lock(report_mu);
                if (outcome.ok) {
                    ++report.succeeded;
                } else {
                    ++report.failed;
                    report.failed_keys.push_back(job.request.request_key);
                }
            } catch (...) {
                // Sink failures (or other unexpected errors) abort the batch.
                {
                    std::lock_guard lock(fatal_mu);
                    if (!fatal) fatal = std::current_exception();
                }
                stop = true;
                break;
            }
        }
    };

    std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.max_parallel), jobs.size());
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) {
        t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    report.max_in_flight = max_in_flight.load();
    std::sort(report.failed_keys.begin(), report.failed_keys.end());
    return report;
}

}  // namespace vpair
