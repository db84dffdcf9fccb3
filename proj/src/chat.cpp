#include "selfendorse/chat.hpp"

#include "selfendorse/errors.hpp"
#include "selfendorse/http_backend.hpp"
#include "selfendorse/scripted_backend.hpp"
#include "selfendorse/serialize.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>

namespace selfendorse {

std::string ChatRequest::prompt_text() const
{
    std::string out;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out += messages[i].content;
    }
    return out;
}

void ChatRequest::validate() const
{
    const bool has_user = std::any_of(messages.begin(), messages.end(),
                                      [](const ChatMessage& m) { return m.role == Role::user; });
    if (!has_user) {
        throw PreconditionError("chat request needs at least one user message");
    }
    if (temperature < 0.0) {
        throw PreconditionError("chat request temperature must be >= 0");
    }
}

ChatRequest make_request(std::string prompt, double temperature, int max_tokens)
{
    ChatRequest request;
    request.messages.push_back({Role::user, std::move(prompt)});
    request.temperature = temperature;
    request.max_tokens = max_tokens;
    return request;
}

BackendSpec BackendSpec::http(std::string endpoint, std::string model, std::string auth_env)
{
    BackendSpec spec;
    spec.kind = Kind::http;
    spec.endpoint = std::move(endpoint);
    spec.model = std::move(model);
    spec.auth_env = std::move(auth_env);
    return spec;
}

BackendSpec BackendSpec::scripted(std::filesystem::path script)
{
    BackendSpec spec;
    spec.kind = Kind::scripted;
    spec.script_path = std::move(script);
    return spec;
}

std::string BackendSpec::model_name() const
{
    return kind == Kind::http ? model : std::string("scripted");
}

void BackendSpec::validate() const
{
    if (kind == Kind::http) {
        if (endpoint.empty() || model.empty()) {
            throw ConfigError("http backend needs an endpoint and a model name");
        }
        if (!script_path.empty()) {
            throw ConfigError("http backend must not carry a script path");
        }
    } else {
        if (script_path.empty()) {
            throw ConfigError("scripted backend needs a script path");
        }
        if (!endpoint.empty() || !model.empty() || !auth_env.empty()) {
            throw ConfigError("scripted backend must not carry http fields");
        }
    }
}

std::shared_ptr<Backend> make_backend(const BackendSpec& spec)
{
    spec.validate();
    if (spec.kind == BackendSpec::Kind::http) {
        return std::make_shared<HttpBackend>(spec);
    }
    return std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(spec.script_path));
}

std::string sha256_hex(std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0x0F]);
    }
    return out;
}

std::string prompt_hash(const ChatRequest& request)
{
    return sha256_hex(request.prompt_text());
}

std::string cache_key(const ChatRequest& request, std::string_view model_name)
{
    Json canonical = {{"model", model_name},
                      {"messages", request.messages},
                      {"temperature", request.temperature},
                      {"top_p", request.top_p},
                      {"max_tokens", request.max_tokens},
                      {"seed_hint", request.seed_hint ? Json(*request.seed_hint) : Json(nullptr)}};
    return sha256_hex(canonical.dump());
}

std::string cache_key(const ChatRequest& request, const BackendSpec& backend)
{
    return cache_key(request, backend.model_name());
}

bool is_cacheable(const ChatRequest& request) noexcept
{
    return request.temperature == 0.0 || request.seed_hint.has_value();
}

}  // namespace selfendorse
