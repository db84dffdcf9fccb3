#pragma once

#include "selfendorse/chat.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfendorse {

/// One line of a script file:
///   {"match": {"prompt_contains": ["a", "b"]}, "reply": "..."}
///   {"match": {"prompt_hash": "<sha256 of prompt_text>"}, "reply": "..."}
/// `match` may also pin `seed_hint`. `replies` (an array) may replace
/// `reply`; the entry used is `replies[seed_hint mod size]`, or the first one
/// for requests without a seed hint.
struct ScriptRule {
    std::vector<std::string> prompt_contains;
    std::optional<std::string> prompt_hash;
    std::optional<std::int64_t> seed_hint;
    std::vector<std::string> replies;

    bool matches(const ChatRequest& request, std::string_view prompt) const;
    /// Same, with the prompt's hash already computed.
    bool matches(const ChatRequest& request, std::string_view prompt, std::string_view hash) const;
    const std::string& reply_for(const ChatRequest& request) const;
};

/// Deterministic backend: first matching rule wins, top to bottom.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<ScriptRule> rules);

    static ScriptedBackend from_file(const std::filesystem::path& path);
    static ScriptedBackend from_jsonl(std::string_view text);

    ChatResponse complete(const ChatRequest& request) override;
    std::string model_name() const override { return "scripted"; }

    const std::vector<ScriptRule>& rules() const noexcept { return rules_; }
    long calls() const noexcept { return calls_.load(); }

    ScriptedBackend(const ScriptedBackend& other) : rules_(other.rules_), calls_(other.calls_.load()) {}

private:
    std::vector<ScriptRule> rules_;
    std::atomic<long> calls_{0};
};

/// Backend driven by a function of the request; handy for synthetic worlds.
class CallbackBackend : public Backend {
public:
    using Handler = std::function<std::string(const ChatRequest&)>;

    explicit CallbackBackend(Handler handler, std::string model = "callback")
        : handler_(std::move(handler)), model_(std::move(model))
    {}

    ChatResponse complete(const ChatRequest& request) override;
    std::string model_name() const override { return model_; }
    long calls() const noexcept { return calls_.load(); }

private:
    Handler handler_;
    std::string model_;
    std::atomic<long> calls_{0};
};

/// Serializes one rule as a script line (no trailing newline).
std::string to_script_line(const ScriptRule& rule);

/// Passes calls through to another backend and remembers each distinct
/// (prompt, seed hint) with its reply, so a session can be replayed later by
/// a ScriptedBackend.
class RecordingBackend : public Backend {
public:
    explicit RecordingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

    ChatResponse complete(const ChatRequest& request) override;
    std::string model_name() const override { return inner_->model_name(); }

    /// Exact-hash rules in first-seen order.
    std::vector<ScriptRule> rules() const;
    void write_script(const std::filesystem::path& path) const;

private:
    std::shared_ptr<Backend> inner_;
    mutable std::mutex mutex_;
    std::vector<ScriptRule> rules_;
    std::set<std::pair<std::string, std::optional<std::int64_t>>> seen_;
};

}  // namespace selfendorse
