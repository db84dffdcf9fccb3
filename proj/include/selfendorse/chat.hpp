#pragma once

#include "selfendorse/types.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace selfendorse {

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    double top_p = 1.0;
    std::optional<std::int64_t> seed_hint;

    /// Message contents joined by newlines; what scripted rules match against.
    std::string prompt_text() const;

    /// Throws PreconditionError unless there is a user message and temperature >= 0.
    void validate() const;
};

/// Single-user-message request.
ChatRequest make_request(std::string prompt, double temperature = 0.0, int max_tokens = 1024);

enum class FinishReason { stop, length, other };

struct ChatResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    double latency_ms = 0.0;
};

/// Where completions come from. Exactly one kind's fields are meaningful.
struct BackendSpec {
    enum class Kind { http, scripted };
    Kind kind = Kind::scripted;

    // http
    std::string endpoint;  // e.g. http://localhost:8000/v1
    std::string model;
    std::string auth_env;  // name of the env var holding the bearer token

    // scripted
    std::filesystem::path script_path;

    static BackendSpec http(std::string endpoint, std::string model, std::string auth_env = {});
    static BackendSpec scripted(std::filesystem::path script);

    /// Model name as it enters cache keys ("scripted" for scripted backends).
    std::string model_name() const;

    void validate() const;
};

/// A chat-completion provider. Implementations throw TransportError for
/// failures worth retrying and ProtocolError / ScriptMiss otherwise.
/// complete() must be safe to call concurrently.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string model_name() const = 0;
};

std::shared_ptr<Backend> make_backend(const BackendSpec& spec);

/// Hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// sha256_hex(request.prompt_text()); the `prompt_hash` scripted rules match on.
std::string prompt_hash(const ChatRequest& request);

/// Stable content hash over messages, temperature, top_p, max_tokens,
/// seed_hint and model name.
std::string cache_key(const ChatRequest& request, std::string_view model_name);
std::string cache_key(const ChatRequest& request, const BackendSpec& backend);

/// Greedy calls are always cacheable; sampling calls only with a seed_hint.
bool is_cacheable(const ChatRequest& request) noexcept;

}  // namespace selfendorse
