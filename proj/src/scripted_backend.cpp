#include "selfendorse/scripted_backend.hpp"

#include "selfendorse/errors.hpp"
#include "selfendorse/serialize.hpp"

#include <fstream>
#include <sstream>

namespace selfendorse {

namespace {

ScriptRule parse_rule(const Json& j)
{
    ScriptRule rule;
    const auto& match = j.at("match");
    if (!match.is_object()) {
        throw Error("\"match\" must be an object");
    }
    if (match.contains("prompt_contains")) {
        rule.prompt_contains = match.at("prompt_contains").get<std::vector<std::string>>();
    }
    if (match.contains("prompt_hash")) {
        rule.prompt_hash = match.at("prompt_hash").get<std::string>();
    }
    if (match.contains("seed_hint")) {
        rule.seed_hint = match.at("seed_hint").get<std::int64_t>();
    }
    if (j.contains("replies")) {
        rule.replies = j.at("replies").get<std::vector<std::string>>();
    } else {
        rule.replies.push_back(j.at("reply").get<std::string>());
    }
    if (rule.replies.empty()) {
        throw Error("rule has no replies");
    }
    return rule;
}

}  // namespace

bool ScriptRule::matches(const ChatRequest& request, std::string_view prompt) const
{
    return matches(request, prompt, prompt_hash ? sha256_hex(prompt) : std::string());
}

bool ScriptRule::matches(const ChatRequest& request, std::string_view prompt, std::string_view hash) const
{
    if (seed_hint && request.seed_hint != seed_hint) {
        return false;
    }
    if (prompt_hash && *prompt_hash != hash) {
        return false;
    }
    for (const auto& needle : prompt_contains) {
        if (prompt.find(needle) == std::string_view::npos) {
            return false;
        }
    }
    return true;
}

const std::string& ScriptRule::reply_for(const ChatRequest& request) const
{
    if (replies.size() == 1 || !request.seed_hint) {
        return replies.front();
    }
    const auto size = static_cast<std::int64_t>(replies.size());
    const auto slot = ((*request.seed_hint % size) + size) % size;
    return replies[static_cast<std::size_t>(slot)];
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules) : rules_(std::move(rules)) {}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open script " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_jsonl(buffer.str());
}

ScriptedBackend ScriptedBackend::from_jsonl(std::string_view text)
{
    std::vector<ScriptRule> rules;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rules.push_back(parse_rule(Json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad script rule: ") + e.what(), line_no);
        }
    }
    return ScriptedBackend(std::move(rules));
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request)
{
    ++calls_;
    const auto prompt = request.prompt_text();
    const auto hash = sha256_hex(prompt);
    for (const auto& rule : rules_) {
        if (rule.matches(request, prompt, hash)) {
            ChatResponse response;
            response.text = rule.reply_for(request);
            return response;
        }
    }
    throw ScriptMiss("no scripted reply for prompt (hash " + hash + "): " +
                     prompt.substr(0, 120));
}

ChatResponse CallbackBackend::complete(const ChatRequest& request)
{
    ++calls_;
    ChatResponse response;
    response.text = handler_(request);
    return response;
}

std::string to_script_line(const ScriptRule& rule)
{
    Json match = Json::object();
    if (!rule.prompt_contains.empty()) match["prompt_contains"] = rule.prompt_contains;
    if (rule.prompt_hash) match["prompt_hash"] = *rule.prompt_hash;
    if (rule.seed_hint) match["seed_hint"] = *rule.seed_hint;
    Json j = {{"match", std::move(match)}};
    if (rule.replies.size() == 1) {
        j["reply"] = rule.replies.front();
    } else {
        j["replies"] = rule.replies;
    }
    return j.dump();
}

ChatResponse RecordingBackend::complete(const ChatRequest& request)
{
    auto response = inner_->complete(request);
    const auto hash = prompt_hash(request);
    std::lock_guard lock(mutex_);
    if (seen_.emplace(hash, request.seed_hint).second) {
        ScriptRule rule;
        rule.prompt_hash = hash;
        rule.seed_hint = request.seed_hint;
        rule.replies = {response.text};
        rules_.push_back(std::move(rule));
    }
    return response;
}

std::vector<ScriptRule> RecordingBackend::rules() const
{
    std::lock_guard lock(mutex_);
    return rules_;
}

void RecordingBackend::write_script(const std::filesystem::path& path) const
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& rule : rules()) out << to_script_line(rule) << '\n';
}

}  // namespace selfendorse
