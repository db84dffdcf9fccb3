#pragma once

#include "selfendorse/gateway.hpp"
#include "selfendorse/prompt_catalog.hpp"
#include "selfendorse/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace selfendorse {

/// Items of a numbered list ("1. x" or "2) y"), markers stripped, in order.
/// Non-blank lines that follow an item without a number are folded into it;
/// text before the first item and after a blank line is dropped.
std::vector<std::string> parse_numbered_list(std::string_view text);

/// Asks the backend (greedy) to list the candidate's facts. Exact duplicate
/// facts within the candidate are dropped. Throws EmptyDecomposition when the
/// reply contains no numbered items.
std::vector<Fact> decompose_by_prompt(const Candidate& candidate, Gateway& gateway, CallTrace& trace,
                                      const PromptCatalog& prompts = PromptCatalog(), int max_tokens = 1024);

/// One fact per sentence.
std::vector<Fact> decompose_by_sentence(const Candidate& candidate);

/// Decomposes every candidate concurrently, filling `facts` in place.
/// Prompt mode falls back to sentence mode for a candidate whose reply has no
/// numbered items; the fallback is reported in `flags` as
/// "<stage>_fallback:<index>". Calls are traced under `stage`.
void decompose_all(std::vector<Candidate>& candidates, DecompositionMode mode, Gateway& gateway,
                   CallTrace& trace, std::vector<std::string>& flags,
                   const PromptCatalog& prompts = PromptCatalog(), int max_tokens = 1024,
                   std::string_view stage = "decompose");

}  // namespace selfendorse
