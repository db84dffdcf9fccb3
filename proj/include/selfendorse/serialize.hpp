#pragma once

#include "selfendorse/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace selfendorse {

using Json = nlohmann::json;

// JSON mapping for every persisted type. Field names follow the C++ members.
void to_json(Json& j, const Query& q);
void from_json(const Json& j, Query& q);
void to_json(Json& j, const Verdict& v);
void from_json(const Json& j, Verdict& v);
void to_json(Json& j, const Fact& f);
void from_json(const Json& j, Fact& f);
void to_json(Json& j, const Candidate& c);
void from_json(const Json& j, Candidate& c);
void to_json(Json& j, const PipelineConfig& c);
void from_json(const Json& j, PipelineConfig& c);
void to_json(Json& j, const ChatMessage& m);
void from_json(const Json& j, ChatMessage& m);
void to_json(Json& j, const TraceEntry& t);
void from_json(const Json& j, TraceEntry& t);
void to_json(Json& j, const FactSet& s);
void from_json(const Json& j, FactSet& s);
void to_json(Json& j, const RunRecord& r);
void from_json(const Json& j, RunRecord& r);

/// Single-line JSON encoding of a record (no trailing newline).
std::string to_jsonl_line(const RunRecord& record);

/// Same as to_jsonl_line but with wall-clock timings removed, for
/// determinism comparisons.
std::string to_jsonl_line_without_timings(const RunRecord& record);

/// Reads every record from a JSONL file. Throws ParseError with the line number.
std::vector<RunRecord> read_run_records(const std::filesystem::path& path);

/// Appends one record as a line and flushes.
void append_run_record(const std::filesystem::path& path, const RunRecord& record);

}  // namespace selfendorse
