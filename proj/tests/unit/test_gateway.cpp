#include "selfendorse/chat.hpp"
#include "selfendorse/errors.hpp"
#include "selfendorse/gateway.hpp"
#include "selfendorse/scripted_backend.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <mutex>
#include <random>
#include <set>
#include <thread>

using namespace selfendorse;
using namespace std::chrono_literals;

namespace {

/// Counts calls and concurrent callers; replies "echo:<prompt>".
class ProbeBackend : public Backend {
public:
    explicit ProbeBackend(std::chrono::milliseconds delay = 0ms) : delay_(delay) {}

    ChatResponse complete(const ChatRequest& request) override
    {
        const int now = ++active_;
        {
            std::lock_guard lock(mutex_);
            peak_ = std::max(peak_, now);
            ++calls_;
        }
        if (delay_ > 0ms) std::this_thread::sleep_for(delay_);
        --active_;
        ChatResponse r;
        r.text = "echo:" + request.prompt_text() + (request.seed_hint ? ":" + std::to_string(*request.seed_hint) : "");
        return r;
    }
    std::string model_name() const override { return "probe"; }

    int calls() const
    {
        std::lock_guard lock(mutex_);
        return calls_;
    }
    int peak() const
    {
        std::lock_guard lock(mutex_);
        return peak_;
    }

private:
    std::chrono::milliseconds delay_;
    std::atomic<int> active_{0};
    mutable std::mutex mutex_;
    int calls_ = 0;
    int peak_ = 0;
};

/// Fails with TransportError `failures` times, then succeeds.
class FlakyBackend : public Backend {
public:
    explicit FlakyBackend(int failures) : failures_(failures) {}
    ChatResponse complete(const ChatRequest&) override
    {
        if (calls_++ < failures_) throw TransportError("connection reset");
        return {"ok"};
    }
    std::string model_name() const override { return "flaky"; }
    int calls() const { return calls_.load(); }

private:
    int failures_;
    std::atomic<int> calls_{0};
};

class RejectingBackend : public Backend {
public:
    ChatResponse complete(const ChatRequest&) override
    {
        ++calls;
        throw ProtocolError("malformed reply");
    }
    std::string model_name() const override { return "reject"; }
    std::atomic<int> calls{0};
};

GatewayOptions fast_retries(int max_inflight = 8)
{
    GatewayOptions o;
    o.max_inflight = max_inflight;
    o.backoff_base = 1ms;
    return o;
}

}  // namespace

TEST(CacheKey, StableAndSensitiveToEveryField)
{
    const auto base = make_request("Tell me a bio of Ada", 0.0, 256);
    EXPECT_EQ(cache_key(base, "m"), cache_key(base, "m"));
    auto r = base;
    r.temperature = 0.5;
    EXPECT_NE(cache_key(r, "m"), cache_key(base, "m"));
    r = base;
    r.max_tokens = 257;
    EXPECT_NE(cache_key(r, "m"), cache_key(base, "m"));
    r = base;
    r.seed_hint = 1;
    EXPECT_NE(cache_key(r, "m"), cache_key(base, "m"));
    r = base;
    r.top_p = 0.9;
    EXPECT_NE(cache_key(r, "m"), cache_key(base, "m"));
    r = base;
    r.messages.insert(r.messages.begin(), {Role::system, "be brief"});
    EXPECT_NE(cache_key(r, "m"), cache_key(base, "m"));
    EXPECT_NE(cache_key(base, "m"), cache_key(base, "other-model"));
    EXPECT_EQ(cache_key(base, BackendSpec::scripted("x.jsonl")), cache_key(base, "scripted"));
}

TEST(CacheKey, ThousandRandomRequestsNoCollisions)
{
    std::mt19937_64 rng(42);
    std::set<std::string> keys;
    std::set<std::string> distinct_requests;
    for (int i = 0; i < 1000; ++i) {
        std::string prompt;
        const auto len = 1 + rng() % 30;
        for (std::size_t c = 0; c < len; ++c) prompt.push_back(static_cast<char>('a' + rng() % 26));
        auto request = make_request(prompt, static_cast<double>(rng() % 3) / 2.0, 64 + static_cast<int>(rng() % 3));
        if (rng() % 2) request.seed_hint = static_cast<std::int64_t>(rng() % 5);
        const auto canonical = prompt + "|" + std::to_string(request.temperature) + "|" +
                               std::to_string(request.max_tokens) + "|" +
                               (request.seed_hint ? std::to_string(*request.seed_hint) : "-");
        distinct_requests.insert(canonical);
        keys.insert(cache_key(request, "model"));
    }
    EXPECT_EQ(keys.size(), distinct_requests.size());
}

TEST(CacheKey, Cacheability)
{
    auto r = make_request("q", 0.0);
    EXPECT_TRUE(is_cacheable(r));
    r.temperature = 1.0;
    EXPECT_FALSE(is_cacheable(r));
    r.seed_hint = 3;
    EXPECT_TRUE(is_cacheable(r));
}

TEST(ChatRequest, Validation)
{
    EXPECT_NO_THROW(make_request("x").validate());
    ChatRequest none;
    EXPECT_THROW(none.validate(), PreconditionError);
    auto hot = make_request("x");
    hot.temperature = -0.1;
    EXPECT_THROW(hot.validate(), PreconditionError);
    ChatRequest sys_only;
    sys_only.messages = {{Role::system, "s"}};
    EXPECT_THROW(sys_only.validate(), PreconditionError);
}

TEST(ScriptedBackend, PromptHashAndMiss)
{
    const auto hash = prompt_hash(make_request("What is the capital of France?"));
    auto backend = ScriptedBackend::from_jsonl(R"({"match": {"prompt_hash": ")" + hash +
                                               R"("}, "reply": "Paris"})");
    EXPECT_EQ(backend.complete(make_request("What is the capital of France?")).text, "Paris");
    EXPECT_THROW(backend.complete(make_request("What is the capital of Spain?")), ScriptMiss);
}

TEST(ScriptedBackend, ContainsFirstMatchAndSeededReplies)
{
    auto backend = ScriptedBackend::from_jsonl(
        "{\"match\": {\"prompt_contains\": [\"bio\", \"Ada\"]}, \"reply\": \"first\"}\n"
        "\n"
        "{\"match\": {\"prompt_contains\": [\"bio\"]}, \"replies\": [\"r0\", \"r1\", \"r2\"]}\n"
        "{\"match\": {\"prompt_contains\": [\"pinned\"], \"seed_hint\": 4}, \"reply\": \"four\"}\n"
        "{\"match\": {\"prompt_contains\": [\"pinned\"]}, \"reply\": \"other\"}\n");
    EXPECT_EQ(backend.rules().size(), 4u);
    EXPECT_EQ(backend.complete(make_request("a bio of Ada")).text, "first");
    auto r = make_request("a bio of Bob", 1.0);
    EXPECT_EQ(backend.complete(r).text, "r0");
    r.seed_hint = 5;
    EXPECT_EQ(backend.complete(r).text, "r2");
    auto p = make_request("pinned", 1.0);
    p.seed_hint = 4;
    EXPECT_EQ(backend.complete(p).text, "four");
    p.seed_hint = 5;
    EXPECT_EQ(backend.complete(p).text, "other");
    EXPECT_EQ(backend.calls(), 5);
}

TEST(ScriptedBackend, BadLineReportsLineNumber)
{
    try {
        ScriptedBackend::from_jsonl("{\"match\": {}, \"reply\": \"a\"}\n{\"match\": 3}\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(RecordingBackend, ReplaysThroughScriptedBackend)
{
    auto recorder = std::make_shared<RecordingBackend>(std::make_shared<ProbeBackend>());
    std::vector<ChatRequest> requests;
    for (int i = 0; i < 5; ++i) {
        auto r = make_request("prompt " + std::to_string(i % 3), 1.0);
        r.seed_hint = i;
        requests.push_back(r);
    }
    requests.push_back(make_request("greedy"));
    std::vector<std::string> originals;
    for (const auto& r : requests) originals.push_back(recorder->complete(r).text);

    const auto path = std::filesystem::temp_directory_path() / "selfendorse_recording.jsonl";
    recorder->write_script(path);
    auto replay = ScriptedBackend::from_file(path);
    for (std::size_t i = 0; i < requests.size(); ++i) {
        EXPECT_EQ(replay.complete(requests[i]).text, originals[i]);
    }
    std::filesystem::remove(path);
}

TEST(Gateway, GreedyRepeatsHitTheCache)
{
    auto backend = std::make_shared<ProbeBackend>();
    Gateway gateway(backend);
    CallTrace trace;
    const auto a = gateway.complete(make_request("hello"), "stage", trace);
    const auto b = gateway.complete(make_request("hello"), "stage", trace);
    EXPECT_EQ(a.text, b.text);
    EXPECT_EQ(backend->calls(), 1);
    EXPECT_EQ(gateway.backend_calls(), 1);
    EXPECT_EQ(gateway.cache_hits(), 1);
    ASSERT_EQ(trace.size(), 2u);
    EXPECT_FALSE(trace[0].cache_hit);
    EXPECT_TRUE(trace[1].cache_hit);
    EXPECT_EQ(trace[0].stage, "stage");
    EXPECT_EQ(trace[0].attempts, 1);
    EXPECT_EQ(trace[0].cache_key, trace[1].cache_key);
}

TEST(Gateway, UnseededSamplingBypassesCache)
{
    auto backend = std::make_shared<ProbeBackend>();
    Gateway gateway(backend);
    CallTrace trace;
    gateway.complete(make_request("hello", 1.0), "s", trace);
    gateway.complete(make_request("hello", 1.0), "s", trace);
    EXPECT_EQ(backend->calls(), 2);
    auto seeded = make_request("hello", 1.0);
    seeded.seed_hint = 9;
    gateway.complete(seeded, "s", trace);
    gateway.complete(seeded, "s", trace);
    EXPECT_EQ(backend->calls(), 3);
}

TEST(Gateway, RetriesTransportErrorsWithBackoff)
{
    auto flaky = std::make_shared<FlakyBackend>(2);
    Gateway gateway(flaky, fast_retries());
    CallTrace trace;
    EXPECT_EQ(gateway.complete(make_request("x"), "s", trace).text, "ok");
    EXPECT_EQ(flaky->calls(), 3);
    EXPECT_EQ(trace.back().attempts, 3);

    auto dead = std::make_shared<FlakyBackend>(100);
    Gateway dead_gateway(dead, fast_retries());
    EXPECT_THROW(dead_gateway.complete(make_request("x"), "s", trace), TransportError);
    EXPECT_EQ(dead->calls(), 4);  // first try plus three retries
}

TEST(Gateway, ProtocolErrorsAreNotRetried)
{
    auto backend = std::make_shared<RejectingBackend>();
    Gateway gateway(backend, fast_retries());
    CallTrace trace;
    EXPECT_THROW(gateway.complete(make_request("x"), "s", trace), ProtocolError);
    EXPECT_EQ(backend->calls.load(), 1);
    EXPECT_TRUE(trace.empty());
}

TEST(Gateway, BatchRespectsInflightCapAndRequestOrder)
{
    auto backend = std::make_shared<ProbeBackend>(5ms);
    Gateway gateway(backend, fast_retries(3));
    std::vector<ChatRequest> requests;
    for (int i = 0; i < 24; ++i) requests.push_back(make_request("p" + std::to_string(i)));
    CallTrace trace;
    const auto replies = gateway.complete_batch(requests, "batch", trace);
    ASSERT_EQ(replies.size(), requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        EXPECT_EQ(replies[i].text, "echo:p" + std::to_string(i));
        EXPECT_EQ(trace[i].messages.front().content, "p" + std::to_string(i));
    }
    EXPECT_LE(backend->peak(), 3);
    EXPECT_EQ(backend->calls(), 24);
}

TEST(Gateway, BatchDeduplicatesIdenticalRequests)
{
    auto backend = std::make_shared<ProbeBackend>(1ms);
    Gateway gateway(backend);
    std::vector<ChatRequest> requests(6, make_request("same"));
    requests.push_back(make_request("different"));
    CallTrace trace;
    const auto replies = gateway.complete_batch(requests, "b", trace);
    EXPECT_EQ(backend->calls(), 2);
    ASSERT_EQ(trace.size(), 7u);
    EXPECT_FALSE(trace[0].cache_hit);
    for (int i = 1; i < 6; ++i) {
        EXPECT_TRUE(trace[static_cast<std::size_t>(i)].cache_hit);
        EXPECT_EQ(replies[static_cast<std::size_t>(i)].text, replies[0].text);
    }
    EXPECT_FALSE(trace[6].cache_hit);
}

TEST(Gateway, ConcurrentIdenticalCallsReachBackendOnce)
{
    auto backend = std::make_shared<ProbeBackend>(20ms);
    auto gateway = std::make_shared<Gateway>(backend);
    std::vector<std::jthread> threads;
    std::mutex m;
    std::vector<std::string> replies;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            CallTrace trace;
            auto text = gateway->complete(make_request("shared"), "s", trace).text;
            std::lock_guard lock(m);
            replies.push_back(std::move(text));
        });
    }
    threads.clear();
    EXPECT_EQ(backend->calls(), 1);
    ASSERT_EQ(replies.size(), 8u);
    for (const auto& r : replies) EXPECT_EQ(r, "echo:shared");
}

TEST(Gateway, PersistentCacheReplaysByteIdentically)
{
    const auto path = std::filesystem::temp_directory_path() / "selfendorse_cache_test.jsonl";
    std::filesystem::remove(path);
    std::vector<std::string> first;
    {
        auto backend = std::make_shared<ProbeBackend>();
        Gateway gateway(backend, {}, std::make_shared<ResponseCache>(path));
        CallTrace trace;
        for (int i = 0; i < 5; ++i) {
            first.push_back(gateway.complete(make_request("line\n\"" + std::to_string(i) + "\""), "s", trace).text);
        }
    }
    auto backend = std::make_shared<ProbeBackend>();
    Gateway gateway(backend, {}, std::make_shared<ResponseCache>(path));
    EXPECT_EQ(gateway.cache().size(), 5u);
    CallTrace trace;
    for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(gateway.complete(make_request("line\n\"" + std::to_string(i) + "\""), "s", trace).text,
                  first[static_cast<std::size_t>(i)]);
    }
    EXPECT_EQ(backend->calls(), 0);
    std::filesystem::remove(path);
}

TEST(SampleCandidates, IndexedSeededAndAllOrNothing)
{
    auto backend = std::make_shared<ScriptedBackend>(ScriptedBackend::from_jsonl(
        R"({"match": {"prompt_contains": ["Tell me a bio of"]}, "replies": ["Bio one.", "Bio two."]})"));
    Gateway gateway(backend);
    CallTrace trace;
    const Query q{"q1", "Tell me a bio of Ada Lovelace", TaskKind::longform};
    const auto candidates = sample_candidates(q, 2, 1.0, gateway, trace);
    ASSERT_EQ(candidates.size(), 2u);
    EXPECT_EQ(candidates[0].index, 0);
    EXPECT_EQ(candidates[0].text, "Bio one.");
    EXPECT_EQ(candidates[1].index, 1);
    EXPECT_EQ(candidates[1].text, "Bio two.");
    ASSERT_EQ(trace.size(), 2u);
    EXPECT_EQ(trace[0].seed_hint, 0);
    EXPECT_EQ(trace[1].seed_hint, 1);
    EXPECT_DOUBLE_EQ(trace[0].temperature, 1.0);
    EXPECT_EQ(trace[0].stage, "sample");

    SamplingOptions shifted;
    shifted.seed = 10;
    CallTrace t2;
    const auto ten = sample_candidates(q, 10, 1.0, gateway, t2, shifted);
    EXPECT_EQ(ten.size(), 10u);
    EXPECT_EQ(t2.front().seed_hint, 10);
    EXPECT_EQ(t2.back().seed_hint, 19);

    EXPECT_THROW(sample_candidates(q, 1, 1.0, gateway, trace), PreconditionError);

    const Query unknown{"q2", "Something else", TaskKind::longform};
    EXPECT_THROW(sample_candidates(unknown, 3, 1.0, gateway, trace), ScriptMiss);
}
