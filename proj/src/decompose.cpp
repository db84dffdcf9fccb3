#include "selfendorse/decompose.hpp"

#include "selfendorse/errors.hpp"
#include "selfendorse/text.hpp"

#include <set>

namespace selfendorse {

namespace {

/// Content after "<digits>[.)]<space>", or nullopt when the line is not an item.
std::optional<std::string_view> item_content(std::string_view line)
{
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t digits = i;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    if (i == digits || i >= line.size() || (line[i] != '.' && line[i] != ')')) {
        return std::nullopt;
    }
    ++i;
    if (i >= line.size() || !is_space(line[i])) {
        return std::nullopt;
    }
    return line.substr(i);
}

std::vector<Fact> to_facts(const Candidate& candidate, const std::vector<std::string>& texts, bool dedupe)
{
    std::vector<Fact> facts;
    std::set<std::string> seen;
    for (const auto& text : texts) {
        if (dedupe && !seen.insert(text).second) {
            continue;
        }
        Fact fact;
        fact.candidate_index = candidate.index;
        fact.fact_index = static_cast<int>(facts.size());
        fact.text = text;
        facts.push_back(std::move(fact));
    }
    return facts;
}

ChatRequest decomposition_request(const Candidate& candidate, const PromptCatalog& prompts, int max_tokens)
{
    return make_request(prompts.render(prompt_names::decompose, {{"response", candidate.text}}), 0.0, max_tokens);
}

std::vector<Fact> facts_from_reply(const Candidate& candidate, const std::string& reply)
{
    auto items = parse_numbered_list(reply);
    if (items.empty()) {
        throw EmptyDecomposition("no numbered facts in decomposition reply for candidate " +
                                 std::to_string(candidate.index));
    }
    return to_facts(candidate, items, true);
}

}  // namespace

std::vector<std::string> parse_numbered_list(std::string_view text)
{
    std::vector<std::string> items;
    bool open = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(pos, end - pos);
        pos = end + 1;

        if (auto content = item_content(line)) {
            auto item = normalize_whitespace(*content);
            open = !item.empty();
            if (open) items.push_back(std::move(item));
            continue;
        }
        auto continuation = normalize_whitespace(line);
        if (continuation.empty()) {
            open = false;
        } else if (open) {
            items.back() += ' ';
            items.back() += continuation;
        }
    }
    return items;
}

std::vector<Fact> decompose_by_prompt(const Candidate& candidate, Gateway& gateway, CallTrace& trace,
                                      const PromptCatalog& prompts, int max_tokens)
{
    if (trim(candidate.text).empty()) {
        throw PreconditionError("cannot decompose an empty candidate");
    }
    const auto reply = gateway.complete(decomposition_request(candidate, prompts, max_tokens), "decompose", trace);
    return facts_from_reply(candidate, reply.text);
}

std::vector<Fact> decompose_by_sentence(const Candidate& candidate)
{
    return to_facts(candidate, split_sentences(candidate.text), false);
}

void decompose_all(std::vector<Candidate>& candidates, DecompositionMode mode, Gateway& gateway,
                   CallTrace& trace, std::vector<std::string>& flags, const PromptCatalog& prompts,
                   int max_tokens, std::string_view stage)
{
    if (mode == DecompositionMode::sentence) {
        for (auto& candidate : candidates) {
            candidate.facts = decompose_by_sentence(candidate);
        }
        return;
    }
    std::vector<ChatRequest> requests;
    std::vector<std::size_t> owners;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (trim(candidates[i].text).empty()) {
            candidates[i].facts.clear();
            continue;
        }
        requests.push_back(decomposition_request(candidates[i], prompts, max_tokens));
        owners.push_back(i);
    }
    const auto replies = gateway.complete_batch(requests, stage, trace);
    for (std::size_t r = 0; r < replies.size(); ++r) {
        auto& candidate = candidates[owners[r]];
        try {
            candidate.facts = facts_from_reply(candidate, replies[r].text);
        } catch (const EmptyDecomposition&) {
            candidate.facts = decompose_by_sentence(candidate);
            flags.push_back(std::string(stage) + "_fallback:" + std::to_string(candidate.index));
        }
    }
}

}  // namespace selfendorse
