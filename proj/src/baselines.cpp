#include "selfendorse/baselines.hpp"

#include "selfendorse/decompose.hpp"
#include "selfendorse/errors.hpp"
#include "selfendorse/text.hpp"

#include <algorithm>
#include <array>
#include <regex>

namespace selfendorse {

namespace {

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
bool is_alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

/// Numeric tokens: digits with optional interior commas and one decimal part.
std::vector<std::string> numeric_tokens(std::string_view text)
{
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_digit(text[i]) || (i > 0 && (is_alpha(text[i - 1]) || is_digit(text[i - 1])))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < text.size() &&
               (is_digit(text[i]) || (text[i] == ',' && i + 1 < text.size() && is_digit(text[i + 1])))) {
            ++i;
        }
        if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
            ++i;
            while (i < text.size() && is_digit(text[i])) ++i;
        }
        std::string token;
        if (start > 0 && text[start - 1] == '-' && (start == 1 || !is_alpha(text[start - 2]))) {
            token.push_back('-');
        }
        token.append(text.substr(start, i - start));
        tokens.push_back(std::move(token));
    }
    return tokens;
}

SamplingOptions sampling_options(const Query& query, const BaselineOptions& options)
{
    return {options.top_p, options.max_tokens, options.seed, sampling_prompt(query, options.prompts)};
}

}  // namespace

std::string normalize_number(std::string_view number)
{
    std::string out;
    for (char c : number) {
        if (is_digit(c) || c == '.' || c == '-') out.push_back(c);
    }
    while (!out.empty() && out.back() == '.') out.pop_back();
    if (const auto dot = out.find('.'); dot != std::string::npos) {
        while (out.back() == '0') out.pop_back();
        if (out.back() == '.') out.pop_back();
    }
    if (out == "-0") out = "0";
    return out;
}

std::optional<std::string> extract_final_answer(std::string_view response, TaskKind kind)
{
    if (kind != TaskKind::math) {
        return std::string(response);
    }
    const auto tokens = numeric_tokens(response);
    if (tokens.empty()) {
        return std::nullopt;
    }
    return normalize_number(tokens.back());
}

std::string majority_vote(std::span<const std::optional<std::string>> answers)
{
    std::vector<std::pair<std::string, int>> tally;  // first-seen order
    for (const auto& answer : answers) {
        if (!answer) continue;
        auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& e) { return e.first == *answer; });
        if (it == tally.end()) {
            tally.emplace_back(*answer, 1);
        } else {
            ++it->second;
        }
    }
    if (tally.empty()) {
        throw NoExtractableAnswers("no sample had an extractable answer");
    }
    const auto* best = &tally.front();
    for (const auto& entry : tally) {
        if (entry.second > best->second) best = &entry;
    }
    return best->first;
}

std::optional<int> parse_usc_choice(std::string_view reply, int n)
{
    const auto lowered = to_lower_ascii(reply);
    auto in_range = [n](long v) -> std::optional<int> {
        if (v >= 1 && v <= n) return static_cast<int>(v - 1);
        return std::nullopt;
    };
    static const std::regex cardinal(R"((?:response|candidate|answer|sample)\s*(?:#|no\.?|number)?\s*(\d+))");
    std::smatch match;
    const std::string text(lowered);
    if (std::regex_search(text, match, cardinal)) {
        return in_range(std::stol(match[1].str()));
    }
    static constexpr std::array<std::string_view, 10> words = {"first", "second",  "third",  "fourth", "fifth",
                                                               "sixth", "seventh", "eighth", "ninth",  "tenth"};
    static const std::regex ordinal(R"(\b(first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth|(\d+)(?:st|nd|rd|th))\b)");
    if (std::regex_search(text, match, ordinal)) {
        if (match[2].matched) {
            return in_range(std::stol(match[2].str()));
        }
        const auto word = match[1].str();
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (word == words[i]) return in_range(static_cast<long>(i + 1));
        }
    }
    return std::nullopt;
}

std::string sampling_prompt(const Query& query, const PromptCatalog& prompts)
{
    if (query.task_kind == TaskKind::math) {
        return prompts.render(prompt_names::math_sample, {{"query", query.text}});
    }
    return query.text;
}

BaselineResult self_consistency(const Query& query, int n, Gateway& gateway, CallTrace& trace,
                                const BaselineOptions& options)
{
    if (query.task_kind != TaskKind::math) {
        throw PreconditionError("self-consistency needs answers comparable by exact match (math queries)");
    }
    BaselineResult result;
    result.candidates =
        sample_candidates(query, n, options.temperature, gateway, trace, sampling_options(query, options));
    std::vector<std::optional<std::string>> answers;
    for (const auto& candidate : result.candidates) {
        answers.push_back(extract_final_answer(candidate.text, query.task_kind));
    }
    result.text = majority_vote(answers);
    result.annotations["sc_answer"] = result.text;
    return result;
}

BaselineResult universal_self_consistency(const Query& query, int n, Gateway& gateway, CallTrace& trace,
                                          const BaselineOptions& options)
{
    BaselineResult result;
    result.candidates =
        sample_candidates(query, n, options.temperature, gateway, trace, sampling_options(query, options));
    std::string listing;
    for (const auto& candidate : result.candidates) {
        if (!listing.empty()) listing += "\n\n";
        listing += "Response " + std::to_string(candidate.index + 1) + ":\n" + candidate.text;
    }
    const auto prompt = options.prompts.render(prompt_names::usc_choose, {{"query", query.text}, {"responses", listing}});
    const auto reply = gateway.complete(make_request(prompt, 0.0, options.max_tokens), "usc_choose", trace);
    auto choice = parse_usc_choice(reply.text, n);
    if (!choice) {
        result.flags.emplace_back("usc_unparsed_choice");
        choice = 0;
    }
    result.text = result.candidates[static_cast<std::size_t>(*choice)].text;
    result.annotations["usc_choice"] = std::to_string(*choice);
    return result;
}

BaselineResult chain_of_verification(const Query& query, Gateway& gateway, CallTrace& trace,
                                     const BaselineOptions& options)
{
    const auto& prompts = options.prompts;
    BaselineResult result;
    const auto draft =
        gateway.complete(make_request(sampling_prompt(query, prompts), 0.0, options.max_tokens), "cove_draft", trace).text;
    result.annotations["cove_draft"] = draft;

    const auto plan = gateway.complete(
        make_request(prompts.render(prompt_names::cove_plan, {{"query", query.text}, {"draft", draft}}), 0.0,
                     options.max_tokens),
        "cove_plan", trace);
    const auto questions = parse_numbered_list(plan.text);
    result.annotations["cove_questions"] = std::to_string(questions.size());
    if (questions.empty()) {
        result.flags.emplace_back("cove_no_questions");
        result.text = draft;
        return result;
    }

    std::vector<ChatRequest> checks;
    for (const auto& question : questions) {
        checks.push_back(
            make_request(prompts.render(prompt_names::cove_answer, {{"question", question}}), 0.0, options.max_tokens));
    }
    const auto answers = gateway.complete_batch(checks, "cove_answer", trace);

    std::string verifications;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        if (i > 0) verifications += "\n";
        verifications += "Q" + std::to_string(i + 1) + ": " + questions[i] + "\nA" + std::to_string(i + 1) + ": " +
                         trim(answers[i].text);
    }
    result.text = gateway
                      .complete(make_request(prompts.render(prompt_names::cove_final, {{"query", query.text},
                                                                                        {"draft", draft},
                                                                                        {"verifications", verifications}}),
                                             0.0, options.max_tokens),
                                "cove_final", trace)
                      .text;
    return result;
}

BaselineResult refine(const Query& query, Gateway& gateway, CallTrace& trace, const BaselineOptions& options)
{
    const auto& prompts = options.prompts;
    BaselineResult result;
    const auto draft =
        gateway.complete(make_request(sampling_prompt(query, prompts), 0.0, options.max_tokens), "refine_draft", trace).text;
    result.annotations["refine_draft"] = draft;
    result.text = gateway
                      .complete(make_request(prompts.render(prompt_names::refine, {{"query", query.text}, {"draft", draft}}),
                                             0.0, options.max_tokens),
                                "refine", trace)
                      .text;
    return result;
}

}  // namespace selfendorse
