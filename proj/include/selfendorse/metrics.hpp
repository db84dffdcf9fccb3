#pragma once

#include "selfendorse/dataset.hpp"
#include "selfendorse/gateway.hpp"
#include "selfendorse/prompt_catalog.hpp"
#include "selfendorse/serialize.hpp"
#include "selfendorse/types.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace selfendorse {

// ---- answer-level metrics -------------------------------------------------

/// True iff some alias occurs in the response (case-insensitive,
/// whitespace-normalized). Throws PreconditionError on an empty alias list.
bool answer_recall(std::string_view response, const std::vector<std::string>& gold_aliases);

/// Numeric equality after normalize_number ("72.0" == "72").
bool numeric_match(std::string_view extracted, std::string_view gold);

/// Mean over examples of numeric_match(extract_final_answer(response), gold).
double exact_match_accuracy(const std::vector<std::string>& responses, const std::vector<std::string>& golds);

using Decomposer = std::function<std::vector<Fact>(const Candidate&)>;

/// Number of facts the decomposer finds in the response; 0 for an empty response.
int fact_count(std::string_view response, const Decomposer& decomposer);

// ---- fact-level judging ---------------------------------------------------

struct JudgeVerdict {
    int candidate_index = 0;
    int fact_index = 0;
    std::string fact_text;
    bool supported = false;
    std::string judge;
};

/// Decides whether a fact about an example is supported.
class FactJudge {
public:
    virtual ~FactJudge() = default;
    virtual std::string name() const = 0;
    /// Throws JudgeUnavailable when no decision can be made.
    virtual bool supported(const Fact& fact, const Example& example) = 0;
};

/// Reference-bank judge: a fact is supported when its normalized text equals
/// a bank entry for the example or (substring mode) one contains the other.
class OracleJudge : public FactJudge {
public:
    using Bank = std::map<std::string, std::vector<std::string>>;

    explicit OracleJudge(Bank bank, bool allow_substring = true);

    /// JSONL of {"id": <example id>, "facts": [...]}.
    static OracleJudge from_file(const std::filesystem::path& path, bool allow_substring = true);

    std::string name() const override { return "oracle"; }
    bool supported(const Fact& fact, const Example& example) override;

private:
    Bank bank_;
    bool allow_substring_;
};

/// Asks a backend, via the fact_judge template, whether the evidence
/// supports the fact. Evidence comes from the bank entries for the example.
class BackendJudge : public FactJudge {
public:
    BackendJudge(Gateway& gateway, OracleJudge::Bank evidence, PromptCatalog prompts = PromptCatalog());

    std::string name() const override { return "backend:" + gateway_.model_name(); }
    bool supported(const Fact& fact, const Example& example) override;

private:
    Gateway& gateway_;
    OracleJudge::Bank evidence_;
    PromptCatalog prompts_;
};

struct JudgeResult {
    std::vector<JudgeVerdict> verdicts;
    std::optional<double> support_rate;  // unset when there were no facts
};

JudgeResult judge_facts(const std::vector<Fact>& facts, const Example& example, FactJudge& judge);

// ---- reports --------------------------------------------------------------

struct ExampleMetrics {
    std::string id;
    std::string status = "complete";
    std::optional<double> fact_acc;
    double n_fact = 0.0;
    std::optional<double> ans_rec;
    std::optional<double> acc;
    std::optional<double> selected_facts;  // |Z| for regeneration runs
};

/// Headline numbers are means of the per-example values over completed
/// examples where the value is defined.
struct MetricsReport {
    std::optional<double> fact_acc;
    double n_fact = 0.0;
    std::optional<double> ans_rec;
    std::optional<double> acc;
    std::optional<double> selected_facts;
    std::size_t completed = 0;
    std::size_t failed = 0;
    std::vector<ExampleMetrics> examples;
};

MetricsReport aggregate(std::vector<ExampleMetrics> examples);

/// Per-example metrics from a persisted record alone (plus gold). The base
/// method averages over all sampled candidates; other methods score
/// RunRecord::final_facts and final_response. `judge` may be null, leaving
/// fact_acc unset.
ExampleMetrics example_metrics(const RunRecord& record, const Example& example, FactJudge* judge);

Json report_to_json(const MetricsReport& report);
/// Aligned plain-text table: one row per example plus a mean row.
std::string report_to_table(const MetricsReport& report);

// ---- endorsement / factuality correlation ---------------------------------

struct CorrelationReport {
    std::optional<double> pearson;  // unset when truth is constant
    std::array<std::size_t, 10> bin_counts{};
    std::array<std::optional<double>, 10> bin_factuality{};  // mean truth per score decile
    std::size_t points = 0;
};

/// Pearson correlation between score and truth (as 0/1) plus mean truth per
/// score decile ([0, .1), ..., [.9, 1]). Throws DegenerateInput unless there
/// are at least two distinct scores.
CorrelationReport correlation_report(const std::vector<std::pair<double, bool>>& facts_with_truth);

/// Number of adjacent non-empty bins where factuality decreases.
int decile_inversions(const CorrelationReport& report);

}  // namespace selfendorse
