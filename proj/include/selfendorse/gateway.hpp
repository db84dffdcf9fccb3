#pragma once

#include "selfendorse/chat.hpp"
#include "selfendorse/types.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace selfendorse {

/// Backend calls made on behalf of one query, in request order.
using CallTrace = std::vector<TraceEntry>;

/// Key -> reply store. With a path, existing entries are loaded on
/// construction and every store is appended to the file as a JSONL line.
class ResponseCache {
public:
    ResponseCache() = default;
    explicit ResponseCache(std::filesystem::path path);

    std::optional<std::string> lookup(const std::string& key) const;
    void store(const std::string& key, const std::string& reply);
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::string> entries_;
    std::optional<std::filesystem::path> path_;
};

struct GatewayOptions {
    int max_inflight = 8;
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{200};
};

/// Front door to a Backend: caching, retry with exponential backoff, a cap on
/// in-flight calls, and tracing. Safe to share between concurrently running queries.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {},
                     std::shared_ptr<ResponseCache> cache = std::make_shared<ResponseCache>());

    ChatResponse complete(const ChatRequest& request, std::string_view stage, CallTrace& trace);

    /// Issues the requests concurrently (bounded by max_inflight) and returns
    /// replies in request order. Trace entries are appended in request order.
    /// Identical cacheable requests within the batch are sent once; later
    /// copies are recorded as cache hits. Throws the first failure by index.
    std::vector<ChatResponse> complete_batch(const std::vector<ChatRequest>& requests,
                                             std::string_view stage, CallTrace& trace);

    const std::string& model_name() const noexcept { return model_; }
    const GatewayOptions& options() const noexcept { return options_; }
    ResponseCache& cache() noexcept { return *cache_; }

    /// Calls that actually reached the backend (cache misses, including retries once).
    long backend_calls() const noexcept { return backend_calls_.load(); }
    long cache_hits() const noexcept { return cache_hits_.load(); }

private:
    struct Outcome {
        ChatResponse response;
        std::string key;
        bool cache_hit = false;
        int attempts = 0;
    };

    Outcome call(const ChatRequest& request);
    ChatResponse call_with_retry(const ChatRequest& request, int& attempts);
    static TraceEntry make_entry(std::string_view stage, const ChatRequest& request, const Outcome& outcome);

    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;
    std::shared_ptr<ResponseCache> cache_;
    std::string model_;
    std::counting_semaphore<4096> slots_;
    std::mutex inflight_mutex_;
    std::map<std::string, std::shared_future<std::string>> inflight_;
    std::atomic<long> backend_calls_{0};
    std::atomic<long> cache_hits_{0};
};

struct SamplingOptions {
    double top_p = 0.95;
    int max_tokens = 1024;
    std::uint64_t seed = 0;
    /// User message to sample from; empty means the query text itself.
    std::string prompt;
};

/// Samples n candidates for the query. Sample i carries seed_hint seed + i,
/// so repeated runs with the same seed are cache-reusable. All-or-nothing:
/// any failed sample fails the batch.
std::vector<Candidate> sample_candidates(const Query& query, int n, double temperature, Gateway& gateway,
                                         CallTrace& trace, const SamplingOptions& options = {});

}  // namespace selfendorse
