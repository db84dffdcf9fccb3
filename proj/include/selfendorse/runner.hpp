#pragma once

#include "selfendorse/chat.hpp"
#include "selfendorse/dataset.hpp"
#include "selfendorse/gateway.hpp"
#include "selfendorse/metrics.hpp"
#include "selfendorse/prompt_catalog.hpp"
#include "selfendorse/serialize.hpp"
#include "selfendorse/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfendorse {

enum class Method { endorse_select, endorse_regenerate, sc, usc, cove, refine, base };

std::string_view to_string(Method method) noexcept;
/// Accepts the dashed CLI names ("endorse-regenerate", ...). ConfigError otherwise.
Method parse_method(std::string_view name);

/// Runs one method on one query. Backend and pipeline errors are caught and
/// recorded (status "failed"); the partial trace is kept.
/// The final response is decomposed under stage "evaluate_decompose" so
/// metrics can be recomputed from the record.
RunRecord run_query(const Query& query, Method method, const PipelineConfig& config, Gateway& gateway,
                    const PromptCatalog& prompts, const std::string& run_id);

/// Everything needed to (re)run a method over a dataset.
struct RunManifest {
    std::string run_id;
    Method method = Method::endorse_regenerate;
    std::filesystem::path dataset;
    TaskKind task_kind = TaskKind::longform;
    PipelineConfig config;
    BackendSpec backend;
    std::filesystem::path output_dir = "out";
    std::optional<std::size_t> sample_size;
    std::uint64_t sample_seed = 0;
    std::filesystem::path fact_bank;    // reference facts for the oracle judge; empty: no Fact Acc.
    std::filesystem::path prompts;      // catalog overriding the defaults; empty: defaults
    std::filesystem::path cache;        // persistent response cache; empty: in memory
    int max_inflight = 8;
    bool strict = false;
    std::vector<std::string> sampled_ids;                // filled by run()
    std::map<std::string, std::string> example_status;   // id -> complete | failed

    std::filesystem::path run_dir() const { return output_dir / run_id; }
    std::filesystem::path record_path(const std::string& example_id) const;

    /// Throws ConfigError naming the first problem.
    void validate() const;

    void save(const std::filesystem::path& path) const;
    static RunManifest load(const std::filesystem::path& path);
};

void to_json(Json& j, const RunManifest& m);
void from_json(const Json& j, RunManifest& m);
void to_json(Json& j, const BackendSpec& b);
void from_json(const Json& j, BackendSpec& b);

/// Catalog with the manifest's overrides merged over the defaults.
PromptCatalog load_prompts(const RunManifest& manifest);
std::shared_ptr<Gateway> make_gateway(const RunManifest& manifest);

struct RunResult {
    MetricsReport report;
    std::vector<RunRecord> records;  // dataset order
    std::size_t executed = 0;        // examples run now, not resumed
    std::size_t failed = 0;
    std::size_t transport_failures = 0;
};

/// Executes the manifest: examples run concurrently; each record is appended
/// to <run_dir>/<id>.jsonl as soon as it is done. Examples whose last record
/// is complete are not re-run. Writes manifest.json, report.json and
/// report.txt. With `strict`, the first failure is rethrown.
/// `gateway` may be shared between runs; null builds one from the manifest.
RunResult run(RunManifest manifest, std::shared_ptr<Gateway> gateway = nullptr);

/// Metrics from persisted records alone.
MetricsReport report_from_records(const std::vector<RunRecord>& records, const std::vector<Example>& examples,
                                  FactJudge* judge);

enum class SweepAxis { alpha, n, m, k };

std::string_view to_string(SweepAxis axis) noexcept;
SweepAxis parse_sweep_axis(std::string_view name);

struct SweepRow {
    std::string value;
    MetricsReport report;
    long backend_calls = 0;                   // calls this run added at the gateway
    std::map<std::string, long> stage_calls;  // non-cached trace entries per stage
};

/// Applies one axis value ("0.4", "7", "ALL") to the config.
void apply_axis(PipelineConfig& config, SweepAxis axis, std::string_view value);

/// One run per value through a single shared gateway, so requests that
/// coincide across runs (samples, decompositions, verifications) are served
/// from the cache. Run ids are <run_id>-<axis><value> (e.g. "demo-alpha0.4").
std::vector<SweepRow> sweep(const RunManifest& manifest, SweepAxis axis, const std::vector<std::string>& values);

std::string sweep_table(SweepAxis axis, const std::vector<SweepRow>& rows);
Json sweep_to_json(SweepAxis axis, const std::vector<SweepRow>& rows);

}  // namespace selfendorse
