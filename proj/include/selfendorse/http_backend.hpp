#pragma once

#include "selfendorse/chat.hpp"

#include <chrono>
#include <string>

namespace selfendorse {

/// Client for the `/chat/completions` wire protocol.
///
/// POSTs {model, messages, temperature, max_tokens, top_p[, seed]} to
/// `<endpoint>/chat/completions` and reads `choices[0].message.content`.
/// The bearer token is read from the environment variable named by
/// BackendSpec::auth_env at construction time.
///
/// Connection failures, 429 and 5xx replies throw TransportError (retried by
/// the Gateway). Other non-2xx statuses and malformed bodies throw ProtocolError.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(const BackendSpec& spec,
                         std::chrono::seconds connect_timeout = std::chrono::seconds(10),
                         std::chrono::seconds read_timeout = std::chrono::seconds(300));

    ChatResponse complete(const ChatRequest& request) override;
    std::string model_name() const override { return model_; }

private:
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::string model_;
    std::string token_;
    std::chrono::seconds connect_timeout_;
    std::chrono::seconds read_timeout_;
};

/// Builds the JSON request body sent by HttpBackend.
std::string chat_completion_body(const ChatRequest& request, const std::string& model);

/// Parses a chat-completion reply body. Throws ProtocolError when malformed.
ChatResponse parse_chat_completion(const std::string& body);

}  // namespace selfendorse
