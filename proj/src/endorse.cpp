#include "selfendorse/endorse.hpp"

#include "selfendorse/bm25.hpp"
#include "selfendorse/errors.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace selfendorse {

namespace {

bool word_char(char c) noexcept
{
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

/// Position of the first occurrence of `word` in `lowered` bounded by non-word chars.
std::size_t first_standalone(const std::string& lowered, std::string_view word)
{
    std::size_t pos = lowered.find(word);
    while (pos != std::string::npos) {
        const bool left_ok = pos == 0 || !word_char(lowered[pos - 1]);
        const auto end = pos + word.size();
        const bool right_ok = end >= lowered.size() || !word_char(lowered[end]);
        if (left_ok && right_ok) {
            return pos;
        }
        pos = lowered.find(word, pos + 1);
    }
    return std::string::npos;
}

}  // namespace

PrunedContext prune_context(const Fact& fact, const Candidate& other, std::optional<int> k, const Bm25Params& params)
{
    if (other.index == fact.candidate_index) {
        throw PreconditionError("a fact cannot be verified against its own candidate");
    }
    if (other.facts.empty()) {
        throw EmptyCorpus("candidate " + std::to_string(other.index) + " has no facts");
    }
    const auto scores = bm25_scores(fact, other.facts, params);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return other.facts[a].fact_index < other.facts[b].fact_index;
    });
    const std::size_t keep = k ? std::min<std::size_t>(order.size(), static_cast<std::size_t>(*k)) : order.size();
    order.resize(keep);

    PrunedContext context;
    context.source_candidate = other.index;
    for (auto idx : order) {
        context.kept_facts.push_back(other.facts[idx].fact_index);
        context.kept_scores.push_back(scores[idx]);
    }
    if (!k) {
        context.rendered = other.text;
        return context;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return other.facts[a].fact_index < other.facts[b].fact_index;
    });
    for (auto idx : order) {
        if (!context.rendered.empty()) context.rendered.push_back(' ');
        context.rendered += other.facts[idx].text;
    }
    return context;
}

Verdict parse_verdict(std::string_view raw)
{
    std::string lowered(raw);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 0x20) : c;
    });
    constexpr std::array<std::pair<std::string_view, VerdictLabel>, 3> labels = {{
        {"true", VerdictLabel::True},
        {"false", VerdictLabel::False},
        {"inconclusive", VerdictLabel::Inconclusive},
    }};
    Verdict verdict{VerdictLabel::Inconclusive, std::string(raw)};
    std::size_t best = std::string::npos;
    for (const auto& [word, label] : labels) {
        const auto pos = first_standalone(lowered, word);
        if (pos < best) {
            best = pos;
            verdict.label = label;
        }
    }
    return verdict;
}

ChatRequest verification_request(const Fact& fact, const PrunedContext& context, const PromptCatalog& prompts,
                                 int max_tokens)
{
    return make_request(prompts.render(prompt_names::verify, {{"context", context.rendered}, {"fact", fact.text}}),
                        0.0, max_tokens);
}

Verdict verify(const Fact& fact, const PrunedContext& context, Gateway& gateway, CallTrace& trace,
               const PromptCatalog& prompts, int max_tokens)
{
    if (context.rendered.empty()) {
        throw PreconditionError("verification context is empty");
    }
    const auto reply = gateway.complete(verification_request(fact, context, prompts, max_tokens), "verify", trace);
    return parse_verdict(reply.text);
}

double endorsement_score(const Fact& fact, int n_candidates, const VerdictWeights& weights)
{
    const auto expected = static_cast<std::size_t>(std::max(0, n_candidates - 1));
    if (fact.verdicts.size() != expected) {
        throw MissingVerdicts("fact " + std::to_string(fact.candidate_index) + ":" + std::to_string(fact.fact_index) +
                              " has " + std::to_string(fact.verdicts.size()) + " verdicts, expected " +
                              std::to_string(expected));
    }
    if (expected == 0) {
        throw MissingVerdicts("endorsement needs at least two candidates");
    }
    double total = 0.0;
    for (const auto& [k, verdict] : fact.verdicts) {
        if (k == fact.candidate_index || k < 0 || k >= n_candidates) {
            throw MissingVerdicts("verdict keyed by invalid candidate " + std::to_string(k));
        }
        total += weights[verdict.label];
    }
    return total / static_cast<double>(expected);
}

void endorse_all(std::vector<Candidate>& candidates, const PipelineConfig& config, Gateway& gateway, CallTrace& trace,
                 std::vector<std::string>& flags, const PromptCatalog& prompts)
{
    struct Pair {
        std::size_t candidate;
        std::size_t fact;
        int other;
    };
    std::vector<ChatRequest> requests;
    std::vector<Pair> pairs;
    for (const auto& other : candidates) {
        if (other.facts.empty()) {
            flags.push_back("empty_counterpart:" + std::to_string(other.index));
        }
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (std::size_t j = 0; j < candidates[i].facts.size(); ++j) {
            auto& fact = candidates[i].facts[j];
            fact.verdicts.clear();
            fact.score.reset();
            for (const auto& other : candidates) {
                if (other.index == candidates[i].index) continue;
                if (other.facts.empty()) {
                    fact.verdicts[other.index] = Verdict{VerdictLabel::Inconclusive, ""};
                    continue;
                }
                const auto context = prune_context(fact, other, config.context_k, config.bm25);
                requests.push_back(verification_request(fact, context, prompts, config.max_tokens));
                pairs.push_back({i, j, other.index});
            }
        }
    }
    const auto replies = gateway.complete_batch(requests, "verify", trace);
    for (std::size_t r = 0; r < replies.size(); ++r) {
        const auto& pair = pairs[r];
        candidates[pair.candidate].facts[pair.fact].verdicts[pair.other] = parse_verdict(replies[r].text);
    }
    const int n = static_cast<int>(candidates.size());
    for (auto& candidate : candidates) {
        for (auto& fact : candidate.facts) {
            fact.score = endorsement_score(fact, n, config.verdict_weights);
        }
    }
}

}  // namespace selfendorse
