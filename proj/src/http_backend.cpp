#include "selfendorse/http_backend.hpp"

#include "selfendorse/errors.hpp"
#include "selfendorse/serialize.hpp"

#include <httplib.h>

#include <cstdlib>

namespace selfendorse {

HttpBackend::HttpBackend(const BackendSpec& spec, std::chrono::seconds connect_timeout,
                         std::chrono::seconds read_timeout)
    : model_(spec.model), connect_timeout_(connect_timeout), read_timeout_(read_timeout)
{
    const auto scheme_end = spec.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must include a scheme: " + spec.endpoint);
    }
    const auto path_start = spec.endpoint.find('/', scheme_end + 3);
    scheme_host_port_ = spec.endpoint.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? std::string() : spec.endpoint.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
        path_prefix_.pop_back();
    }
    if (!spec.auth_env.empty()) {
        if (const char* token = std::getenv(spec.auth_env.c_str())) {
            token_ = token;
        }
    }
}

std::string chat_completion_body(const ChatRequest& request, const std::string& model)
{
    Json body = {{"model", model},
                 {"messages", request.messages},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens},
                 {"top_p", request.top_p}};
    if (request.seed_hint) {
        body["seed"] = *request.seed_hint;
    }
    return body.dump();
}

ChatResponse parse_chat_completion(const std::string& body)
{
    Json reply;
    try {
        reply = Json::parse(body);
    } catch (const Json::parse_error& e) {
        throw ProtocolError(std::string("reply is not JSON: ") + e.what());
    }
    try {
        const auto& choice = reply.at("choices").at(0);
        ChatResponse response;
        const auto& content = choice.at("message").at("content");
        response.text = content.is_null() ? std::string() : content.get<std::string>();
        const auto reason = choice.value("finish_reason", Json(nullptr));
        if (reason.is_string()) {
            const auto r = reason.get<std::string>();
            response.finish_reason = r == "stop"     ? FinishReason::stop
                                     : r == "length" ? FinishReason::length
                                                     : FinishReason::other;
        }
        if (reply.contains("usage") && reply["usage"].is_object()) {
            response.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
            response.completion_tokens = reply["usage"].value("completion_tokens", 0);
        }
        if (response.finish_reason == FinishReason::stop && content.is_null()) {
            throw ProtocolError("reply finished normally without content");
        }
        return response;
    } catch (const Json::exception& e) {
        throw ProtocolError(std::string("malformed chat completion: ") + e.what());
    }
}

ChatResponse HttpBackend::complete(const ChatRequest& request)
{
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(connect_timeout_);
    client.set_read_timeout(read_timeout_);
    if (!token_.empty()) {
        client.set_bearer_token_auth(token_);
    }
    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(path_prefix_ + "/chat/completions", chat_completion_body(request, model_),
                              "application/json");
    if (!result) {
        throw TransportError("POST " + scheme_host_port_ + path_prefix_ +
                             "/chat/completions failed: " + httplib::to_string(result.error()));
    }
    if (result->status == 429 || result->status >= 500) {
        throw TransportError("backend returned HTTP " + std::to_string(result->status));
    }
    if (result->status < 200 || result->status >= 300) {
        throw ProtocolError("backend returned HTTP " + std::to_string(result->status) + ": " +
                            result->body.substr(0, 200));
    }
    auto response = parse_chat_completion(result->body);
    response.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return response;
}

}  // namespace selfendorse
