#pragma once

#include "selfendorse/gateway.hpp"
#include "selfendorse/prompt_catalog.hpp"
#include "selfendorse/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfendorse {

/// The slice of another candidate a fact is verified against.
struct PrunedContext {
    int source_candidate = 0;
    /// fact_index values of the kept facts, by descending BM25 score (ties: lower index first).
    std::vector<int> kept_facts;
    std::vector<double> kept_scores;
    /// Kept facts in their original order joined by single spaces, or the
    /// whole candidate text when pruning is disabled.
    std::string rendered;
};

/// Keeps the top `k` facts of `other` by BM25 similarity to `fact`
/// (`k` empty = ALL = no pruning). Throws EmptyCorpus when `other` has no
/// facts, PreconditionError when `other` is the fact's own candidate.
PrunedContext prune_context(const Fact& fact, const Candidate& other, std::optional<int> k,
                            const Bm25Params& params = {});

/// Earliest standalone label wins (case-insensitive); no label -> Inconclusive.
Verdict parse_verdict(std::string_view raw);

ChatRequest verification_request(const Fact& fact, const PrunedContext& context,
                                 const PromptCatalog& prompts = PromptCatalog(), int max_tokens = 1024);

Verdict verify(const Fact& fact, const PrunedContext& context, Gateway& gateway, CallTrace& trace,
               const PromptCatalog& prompts = PromptCatalog(), int max_tokens = 1024);

/// Mean verdict weight over the other n_candidates - 1 candidates.
/// Throws MissingVerdicts unless there is exactly one verdict per other candidate.
double endorsement_score(const Fact& fact, int n_candidates, const VerdictWeights& weights = {});

/// Verifies every fact of every candidate against every other candidate and
/// stores verdicts and scores in place. Verification calls run concurrently;
/// a counterpart with no facts yields an Inconclusive verdict without a call
/// and an "empty_counterpart:<k>" flag.
void endorse_all(std::vector<Candidate>& candidates, const PipelineConfig& config, Gateway& gateway,
                 CallTrace& trace, std::vector<std::string>& flags,
                 const PromptCatalog& prompts = PromptCatalog());

}  // namespace selfendorse
