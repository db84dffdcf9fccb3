#include "selfendorse/gateway.hpp"

#include "selfendorse/errors.hpp"
#include "selfendorse/serialize.hpp"

#include <fstream>
#include <thread>

namespace selfendorse {

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path))
{
    std::ifstream in(*path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = Json::parse(line);
            entries_.insert_or_assign(j.at("key").get<std::string>(), j.at("reply").get<std::string>());
        } catch (const Json::exception& e) {
            throw ParseError(path_->string() + ": " + e.what(), line_no);
        }
    }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const
{
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
        return it->second;
    }
    return std::nullopt;
}

void ResponseCache::store(const std::string& key, const std::string& reply)
{
    std::unique_lock lock(mutex_);
    if (!entries_.emplace(key, reply).second) {
        return;
    }
    if (path_) {
        if (path_->has_parent_path()) {
            std::filesystem::create_directories(path_->parent_path());
        }
        std::ofstream out(*path_, std::ios::app);
        out << Json{{"key", key}, {"reply", reply}}.dump() << '\n';
    }
}

std::size_t ResponseCache::size() const
{
    std::shared_lock lock(mutex_);
    return entries_.size();
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options, std::shared_ptr<ResponseCache> cache)
    : backend_(std::move(backend)),
      options_(options),
      cache_(std::move(cache)),
      model_(backend_->model_name()),
      slots_(std::max(1, std::min(options.max_inflight, 4096)))
{
    if (options_.max_inflight < 1) {
        throw ConfigError("max_inflight must be >= 1");
    }
    if (options_.max_retries < 0) {
        throw ConfigError("max_retries must be >= 0");
    }
}

ChatResponse Gateway::call_with_retry(const ChatRequest& request, int& attempts)
{
    ++backend_calls_;
    for (int attempt = 0;; ++attempt) {
        attempts = attempt + 1;
        slots_.acquire();
        try {
            auto response = backend_->complete(request);
            slots_.release();
            return response;
        } catch (const TransportError&) {
            slots_.release();
            if (attempt >= options_.max_retries) {
                throw;
            }
        } catch (...) {
            slots_.release();
            throw;
        }
        std::this_thread::sleep_for(options_.backoff_base * (1LL << std::min(attempt, 20)));
    }
}

Gateway::Outcome Gateway::call(const ChatRequest& request)
{
    request.validate();
    Outcome outcome;
    outcome.key = cache_key(request, model_);
    if (!is_cacheable(request)) {
        outcome.response = call_with_retry(request, outcome.attempts);
        return outcome;
    }
    auto served_from_cache = [&](std::string text) {
        outcome.response.text = std::move(text);
        outcome.cache_hit = true;
        ++cache_hits_;
        return outcome;
    };
    if (auto hit = cache_->lookup(outcome.key)) {
        return served_from_cache(std::move(*hit));
    }

    std::promise<std::string> promise;
    std::shared_future<std::string> pending;
    {
        std::lock_guard lock(inflight_mutex_);
        if (auto hit = cache_->lookup(outcome.key)) {
            return served_from_cache(std::move(*hit));
        }
        if (auto it = inflight_.find(outcome.key); it != inflight_.end()) {
            pending = it->second;
        } else {
            inflight_.emplace(outcome.key, promise.get_future().share());
        }
    }
    if (pending.valid()) {
        return served_from_cache(pending.get());
    }

    try {
        outcome.response = call_with_retry(request, outcome.attempts);
    } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard lock(inflight_mutex_);
        inflight_.erase(outcome.key);
        throw;
    }
    cache_->store(outcome.key, outcome.response.text);
    promise.set_value(outcome.response.text);
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(outcome.key);
    return outcome;
}

TraceEntry Gateway::make_entry(std::string_view stage, const ChatRequest& request, const Outcome& outcome)
{
    TraceEntry entry;
    entry.stage = std::string(stage);
    entry.cache_key = outcome.key;
    entry.messages = request.messages;
    entry.temperature = request.temperature;
    entry.seed_hint = request.seed_hint;
    entry.reply = outcome.response.text;
    entry.cache_hit = outcome.cache_hit;
    entry.attempts = outcome.attempts;
    return entry;
}

ChatResponse Gateway::complete(const ChatRequest& request, std::string_view stage, CallTrace& trace)
{
    auto outcome = call(request);
    trace.push_back(make_entry(stage, request, outcome));
    return outcome.response;
}

std::vector<ChatResponse> Gateway::complete_batch(const std::vector<ChatRequest>& requests,
                                                  std::string_view stage, CallTrace& trace)
{
    const std::size_t n = requests.size();
    // Within-batch dedup: duplicates copy the first occurrence's outcome.
    std::vector<std::size_t> source(n);
    std::vector<std::size_t> unique;
    {
        std::map<std::string, std::size_t> first_by_key;
        for (std::size_t i = 0; i < n; ++i) {
            source[i] = i;
            if (is_cacheable(requests[i])) {
                auto [it, inserted] = first_by_key.emplace(cache_key(requests[i], model_), i);
                if (!inserted) {
                    source[i] = it->second;
                    continue;
                }
            }
            unique.push_back(i);
        }
    }

    std::vector<std::optional<Outcome>> outcomes(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t u = next++; u < unique.size(); u = next++) {
            const auto i = unique[u];
            try {
                outcomes[i] = call(requests[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(options_.max_inflight), unique.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }

    std::vector<ChatResponse> responses;
    responses.reserve(n);
    std::exception_ptr first_error;
    for (std::size_t i = 0; i < n; ++i) {
        const auto src = source[i];
        if (errors[src]) {
            if (!first_error) first_error = errors[src];
            responses.emplace_back();
            continue;
        }
        Outcome outcome = *outcomes[src];
        if (src != i) {
            outcome.cache_hit = true;
            outcome.attempts = 0;
            ++cache_hits_;
        }
        trace.push_back(make_entry(stage, requests[i], outcome));
        responses.push_back(std::move(outcome.response));
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
    return responses;
}

std::vector<Candidate> sample_candidates(const Query& query, int n, double temperature, Gateway& gateway,
                                         CallTrace& trace, const SamplingOptions& options)
{
    if (n < 2) {
        throw PreconditionError("sample_candidates needs n >= 2, got " + std::to_string(n));
    }
    if (query.text.empty()) {
        throw PreconditionError("query text is empty");
    }
    std::vector<ChatRequest> requests;
    requests.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto request = make_request(options.prompt.empty() ? query.text : options.prompt, temperature,
                                    options.max_tokens);
        request.top_p = options.top_p;
        request.seed_hint = static_cast<std::int64_t>(options.seed) + i;
        requests.push_back(std::move(request));
    }
    auto responses = gateway.complete_batch(requests, "sample", trace);
    std::vector<Candidate> candidates;
    candidates.reserve(responses.size());
    for (int i = 0; i < n; ++i) {
        candidates.push_back({i, std::move(responses[static_cast<std::size_t>(i)].text), {}});
    }
    return candidates;
}

}  // namespace selfendorse
