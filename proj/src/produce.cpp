#include "selfendorse/produce.hpp"

#include "selfendorse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

namespace selfendorse {

double mean_score(const Candidate& candidate)
{
    if (candidate.facts.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& fact : candidate.facts) {
        if (!fact.score) {
            throw PreconditionError("candidate " + std::to_string(candidate.index) + " has unscored facts");
        }
        total += *fact.score;
    }
    return total / static_cast<double>(candidate.facts.size());
}

const Candidate& select_response(const std::vector<Candidate>& candidates)
{
    if (candidates.empty()) {
        throw NoCandidates("no candidates to select from");
    }
    const Candidate* best = &candidates.front();
    double best_mean = mean_score(*best);
    for (const auto& candidate : candidates) {
        const double m = mean_score(candidate);
        if (m > best_mean || (m == best_mean && candidate.index < best->index)) {
            best = &candidate;
            best_mean = m;
        }
    }
    return *best;
}

std::vector<Fact> filter_facts(const std::vector<Fact>& facts, double alpha, int m)
{
    std::vector<Fact> kept;
    for (const auto& fact : facts) {
        if (!fact.score) {
            throw PreconditionError("filter_facts needs scored facts");
        }
        if (fact.candidate_index < m && *fact.score >= alpha) {
            kept.push_back(fact);
        }
    }
    std::stable_sort(kept.begin(), kept.end(), [](const Fact& a, const Fact& b) {
        return std::tie(a.candidate_index, a.fact_index) < std::tie(b.candidate_index, b.fact_index);
    });
    return kept;
}

std::vector<Fact> filter_facts(const std::vector<Candidate>& candidates, double alpha, int m)
{
    std::vector<Fact> all;
    for (const auto& candidate : candidates) {
        all.insert(all.end(), candidate.facts.begin(), candidate.facts.end());
    }
    return filter_facts(all, alpha, m);
}

int cluster_count(const std::vector<Candidate>& candidates, const ClusterPolicy& policy, std::size_t surviving)
{
    int count = 1;
    if (policy.kind == ClusterPolicy::Kind::fixed) {
        count = std::max(1, policy.fixed_count);
    } else if (!candidates.empty()) {
        std::size_t total = 0;
        for (const auto& candidate : candidates) total += candidate.facts.size();
        // Half-up rounding of total / n in integer arithmetic.
        const std::size_t n = candidates.size();
        count = std::max(1, static_cast<int>((2 * total + n) / (2 * n)));
    }
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(count), surviving));
}

FactSet cluster_and_pick(const std::vector<Fact>& facts, int clusters, std::uint64_t seed, const KMeansOptions& options)
{
    if (facts.empty()) {
        throw PreconditionError("cluster_and_pick needs at least one fact");
    }
    if (clusters < 1) {
        throw PreconditionError("cluster_and_pick needs at least one cluster");
    }
    std::vector<std::string> texts;
    texts.reserve(facts.size());
    for (const auto& fact : facts) texts.push_back(fact.text);
    const auto points = bag_of_words(texts);
    // Identical vectors always share a cluster, so more clusters than
    // distinct vectors would only repeat a pick.
    const std::set<Vector> distinct(points.begin(), points.end());
    const int k = std::min<int>(clusters, static_cast<int>(distinct.size()));
    const auto result = kmeans(points, k, seed, options);

    FactSet set;
    std::vector<std::size_t> picked(static_cast<std::size_t>(k), facts.size());
    std::vector<double> picked_distance(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < facts.size(); ++i) {
        const int c = result.assignment[i];
        const double distance = std::sqrt(squared_distance(points[i], result.centroids[static_cast<std::size_t>(c)]));
        set.assignments.push_back({facts[i].candidate_index, facts[i].fact_index, c, distance});
        auto& slot = picked[static_cast<std::size_t>(c)];
        auto& slot_distance = picked_distance[static_cast<std::size_t>(c)];
        const bool better =
            slot == facts.size() || distance < slot_distance ||
            (distance == slot_distance &&
             std::tie(facts[i].candidate_index, facts[i].fact_index) <
                 std::tie(facts[slot].candidate_index, facts[slot].fact_index));
        if (better) {
            slot = i;
            slot_distance = distance;
        }
    }
    for (auto idx : picked) {
        if (idx != facts.size()) set.facts.push_back(facts[idx]);
    }
    return set;
}

std::string render_fact_list(const std::vector<Fact>& facts)
{
    std::string out;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out += std::to_string(i + 1) + ". " + facts[i].text;
    }
    return out;
}

ChatRequest regeneration_request(const Query& query, const FactSet& fact_set, const PromptCatalog& prompts,
                                 int max_tokens)
{
    return make_request(
        prompts.render(prompt_names::regenerate, {{"facts", render_fact_list(fact_set.facts)}, {"query", query.text}}),
        0.0, max_tokens);
}

Production regenerate(const Query& query, const FactSet& fact_set, const std::vector<Candidate>& candidates,
                      Gateway& gateway, CallTrace& trace, const PromptCatalog& prompts, int max_tokens)
{
    Production production;
    production.fact_set = fact_set;
    if (fact_set.facts.empty()) {
        const auto& chosen = select_response(candidates);
        production.text = chosen.text;
        production.selected_candidate = chosen.index;
        production.fell_back_to_selection = true;
        return production;
    }
    production.text = gateway.complete(regeneration_request(query, fact_set, prompts, max_tokens), "regenerate", trace).text;
    return production;
}

Production produce(const Query& query, const std::vector<Candidate>& candidates, const PipelineConfig& config,
                   Gateway& gateway, CallTrace& trace, const PromptCatalog& prompts)
{
    if (config.production_mode == ProductionMode::select) {
        const auto& chosen = select_response(candidates);
        Production production;
        production.text = chosen.text;
        production.selected_candidate = chosen.index;
        return production;
    }
    const auto kept = filter_facts(candidates, config.alpha, config.effective_m());
    FactSet fact_set;
    if (!kept.empty()) {
        const int c = cluster_count(candidates, config.cluster_policy, kept.size());
        fact_set = cluster_and_pick(kept, c, config.seed);
    }
    return regenerate(query, fact_set, candidates, gateway, trace, prompts, config.max_tokens);
}

}  // namespace selfendorse
