#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace selfendorse {

/// Lowercased maximal runs of alphanumeric code points, in input order.
/// Shared by BM25 pruning and bag-of-words clustering so both see one token space.
std::vector<std::string> tokenize(std::string_view text);

/// Splits on `.`, `!` or `?` (plus trailing quotes/brackets) followed by
/// whitespace. Common abbreviations and single-letter initials do not end a
/// sentence. Segments are trimmed; empty segments are dropped.
std::vector<std::string> split_sentences(std::string_view text);

std::string trim(std::string_view text);

/// Collapses every whitespace run to one space and trims.
std::string normalize_whitespace(std::string_view text);

std::string to_lower_ascii(std::string_view text);

/// Lowercase + whitespace-normalized containment test.
bool contains_normalized(std::string_view haystack, std::string_view needle);

bool is_space(char c) noexcept;

}  // namespace selfendorse
