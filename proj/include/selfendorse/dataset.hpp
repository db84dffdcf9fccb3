#pragma once

#include "selfendorse/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace selfendorse {

/// One benchmark item. Which gold field is populated follows the task kind:
/// longform -> entity, short_qa -> answer_aliases, math -> numeric_answer.
struct Example {
    std::string id;
    Query query;
    std::string entity;
    std::vector<std::string> answer_aliases;
    std::string numeric_answer;
};

/// Loads a dataset file:
///  - longform: one entity per line; blank lines skipped; the query is
///    "Tell me a bio of <entity>".
///  - short_qa: JSON array or JSONL of {"question", "answers"|"aliases"|"answer"}
///    (TriviaQA's {"Answer": {"Aliases": [...]}} shape is accepted too).
///  - math: JSONL of {"question", "answer"} where the answer ends in "#### <number>".
/// Throws ParseError carrying the offending line.
std::vector<Example> load_dataset(const std::filesystem::path& path, TaskKind kind);

/// The biography query for an entity.
std::string bio_query(const std::string& entity);

/// Seed-pinned subset of `count` examples in original order (all when count >= size).
std::vector<Example> sample_examples(const std::vector<Example>& examples, std::size_t count, std::uint64_t seed);

/// Filesystem-safe form of an example id.
std::string sanitize_id(std::string_view id);

}  // namespace selfendorse
