#pragma once

#include "selfendorse/gateway.hpp"
#include "selfendorse/kmeans.hpp"
#include "selfendorse/prompt_catalog.hpp"
#include "selfendorse/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace selfendorse {

/// Mean endorsement score of the candidate's facts; 0 when it has none.
/// Throws PreconditionError if any fact is unscored.
double mean_score(const Candidate& candidate);

/// Candidate with the highest mean score; ties go to the lowest index.
/// Throws NoCandidates on empty input.
const Candidate& select_response(const std::vector<Candidate>& candidates);

/// Facts with score >= alpha from candidates with index < m, in
/// (candidate index, fact index) order.
std::vector<Fact> filter_facts(const std::vector<Fact>& facts, double alpha, int m);
std::vector<Fact> filter_facts(const std::vector<Candidate>& candidates, double alpha, int m);

/// Cluster count for the regeneration fact set. Dynamic policy: mean fact
/// count over the candidates rounded half-up, at least 1. Either policy is
/// capped at `surviving` (so 0 survivors gives 0).
int cluster_count(const std::vector<Candidate>& candidates, const ClusterPolicy& policy, std::size_t surviving);

/// Clusters the facts' bag-of-words vectors into C groups and keeps the fact
/// nearest each centroid (ties: lower candidate index, then fact index).
/// Requires a non-empty fact list and C >= 1; C is clamped to the number of
/// distinct vectors.
FactSet cluster_and_pick(const std::vector<Fact>& facts, int clusters, std::uint64_t seed,
                         const KMeansOptions& options = {});

/// "1. first fact\n2. second fact".
std::string render_fact_list(const std::vector<Fact>& facts);

ChatRequest regeneration_request(const Query& query, const FactSet& fact_set,
                                 const PromptCatalog& prompts = PromptCatalog(), int max_tokens = 1024);

struct Production {
    std::string text;
    std::optional<FactSet> fact_set;
    std::optional<int> selected_candidate;  // set when the text is a sampled candidate
    bool fell_back_to_selection = false;
};

/// Greedy regeneration from the fact set. An empty fact set falls back to
/// select_response over `candidates`.
Production regenerate(const Query& query, const FactSet& fact_set, const std::vector<Candidate>& candidates,
                      Gateway& gateway, CallTrace& trace, const PromptCatalog& prompts = PromptCatalog(),
                      int max_tokens = 1024);

/// Selection or filter -> cluster -> regenerate, as configured.
Production produce(const Query& query, const std::vector<Candidate>& candidates, const PipelineConfig& config,
                   Gateway& gateway, CallTrace& trace, const PromptCatalog& prompts = PromptCatalog());

}  // namespace selfendorse
