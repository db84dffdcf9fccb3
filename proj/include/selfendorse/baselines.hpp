#pragma once

#include "selfendorse/gateway.hpp"
#include "selfendorse/prompt_catalog.hpp"
#include "selfendorse/types.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfendorse {

/// Canonical numeric text: strips currency, thousands separators, a leading
/// '+', and trailing zeros after the decimal point ("1,200.50" -> "1200.5").
std::string normalize_number(std::string_view number);

/// math: the last numeric token of the response, normalized.
/// short_qa / longform: the whole response (for containment matching).
std::optional<std::string> extract_final_answer(std::string_view response, TaskKind kind);

/// Most frequent answer, ignoring unset entries; ties go to the answer that
/// appeared first. Throws NoExtractableAnswers when every entry is unset.
std::string majority_vote(std::span<const std::optional<std::string>> answers);

/// 0-based index chosen in a USC reply: "Response 2" / "response #2" first,
/// then ordinals ("third", "3rd"). nullopt when nothing in [1, n] is found.
std::optional<int> parse_usc_choice(std::string_view reply, int n);

struct BaselineOptions {
    double temperature = 1.0;  // sampling temperature; all other calls are greedy
    double top_p = 0.95;
    int max_tokens = 1024;
    std::uint64_t seed = 0;
    PromptCatalog prompts;
};

struct BaselineResult {
    std::string text;
    std::vector<Candidate> candidates;
    std::vector<std::string> flags;
    std::map<std::string, std::string> annotations;
};

/// User message used to sample for the query: the math template for math
/// queries, the query text otherwise.
std::string sampling_prompt(const Query& query, const PromptCatalog& prompts);

/// Majority vote over the extracted final answers of n samples (math only).
BaselineResult self_consistency(const Query& query, int n, Gateway& gateway, CallTrace& trace,
                                const BaselineOptions& options = {});

/// The model itself picks the most consistent of n samples. Always returns
/// one sample verbatim; an unparseable choice picks sample 0 and sets the
/// "usc_unparsed_choice" flag.
BaselineResult universal_self_consistency(const Query& query, int n, Gateway& gateway, CallTrace& trace,
                                          const BaselineOptions& options = {});

/// Draft, plan verification questions, answer each question in a fresh
/// context that never shows the draft, then write the verified response.
/// No planned questions: returns the draft with the "cove_no_questions" flag.
BaselineResult chain_of_verification(const Query& query, Gateway& gateway, CallTrace& trace,
                                     const BaselineOptions& options = {});

/// One draft, then one self-correction pass over it.
BaselineResult refine(const Query& query, Gateway& gateway, CallTrace& trace, const BaselineOptions& options = {});

}  // namespace selfendorse
