#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfendorse {

enum class TaskKind { longform, short_qa, math };

struct Query {
    std::string id;
    std::string text;
    TaskKind task_kind = TaskKind::longform;

    bool operator==(const Query&) const = default;
};

enum class VerdictLabel { True, False, Inconclusive };

/// Outcome of checking one fact against one other candidate.
/// `raw_text` is the backend reply verbatim; `label` is parse_verdict(raw_text).
struct Verdict {
    VerdictLabel label = VerdictLabel::Inconclusive;
    std::string raw_text;

    bool operator==(const Verdict&) const = default;
};

/// One atomic statement taken from candidate `candidate_index`.
/// `verdicts` is keyed by the index of the candidate it was checked against.
struct Fact {
    int candidate_index = 0;
    int fact_index = 0;
    std::string text;
    std::map<int, Verdict> verdicts;
    std::optional<double> score;

    bool operator==(const Fact&) const = default;
};

struct Candidate {
    int index = 0;
    std::string text;
    std::vector<Fact> facts;

    bool operator==(const Candidate&) const = default;
};

struct VerdictWeights {
    double true_weight = 1.0;
    double inconclusive_weight = 0.5;
    double false_weight = 0.0;

    double operator[](VerdictLabel label) const noexcept
    {
        switch (label) {
        case VerdictLabel::True: return true_weight;
        case VerdictLabel::False: return false_weight;
        case VerdictLabel::Inconclusive: break;
        }
        return inconclusive_weight;
    }

    bool operator==(const VerdictWeights&) const = default;
};

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;

    bool operator==(const Bm25Params&) const = default;
};

struct ClusterPolicy {
    enum class Kind { dynamic_avg, fixed };
    Kind kind = Kind::dynamic_avg;
    int fixed_count = 0;  // used when kind == fixed

    static ClusterPolicy dynamic() { return {}; }
    static ClusterPolicy fixed(int c) { return {Kind::fixed, c}; }

    bool operator==(const ClusterPolicy&) const = default;
};

enum class DecompositionMode { prompt, sentence };
enum class ProductionMode { select, regenerate };

/// Every knob of the pipeline. `context_k` empty means ALL (no pruning);
/// `m_candidates` empty means N.
struct PipelineConfig {
    int n_candidates = 10;
    std::optional<int> context_k = 3;
    double alpha = 1.0;
    std::optional<int> m_candidates;
    double temperature = 1.0;
    double top_p = 0.95;
    int max_tokens = 1024;
    VerdictWeights verdict_weights;
    ClusterPolicy cluster_policy;
    std::uint64_t seed = 0;
    DecompositionMode decomposition_mode = DecompositionMode::prompt;
    ProductionMode production_mode = ProductionMode::regenerate;
    Bm25Params bm25;

    int effective_m() const noexcept { return m_candidates.value_or(n_candidates); }

    /// Math queries always decompose by sentence.
    DecompositionMode decomposition_for(TaskKind kind) const noexcept
    {
        return kind == TaskKind::math ? DecompositionMode::sentence : decomposition_mode;
    }

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;

    bool operator==(const PipelineConfig&) const = default;
};

enum class Role { system, user, assistant };

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

/// One backend call as seen by a query's run.
struct TraceEntry {
    std::string stage;
    std::string cache_key;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<std::int64_t> seed_hint;
    std::string reply;
    bool cache_hit = false;
    int attempts = 0;

    bool operator==(const TraceEntry&) const = default;
};

/// The regeneration fact set: one representative fact per non-empty cluster.
struct FactSet {
    struct Member {
        int candidate_index = 0;
        int fact_index = 0;
        int cluster = 0;
        double centroid_distance = 0.0;

        bool operator==(const Member&) const = default;
    };

    std::vector<Fact> facts;         // picked facts, ordered by cluster id
    std::vector<Member> assignments; // every clustered fact, input order

    bool operator==(const FactSet&) const = default;
};

struct RunRecord {
    std::string run_id;
    std::string method;
    Query query;
    PipelineConfig config;
    std::vector<Candidate> candidates;
    std::optional<FactSet> selected_facts;
    std::string final_response;
    std::vector<Fact> final_facts;  // decomposition of final_response, for metrics
    std::string status = "complete";  // complete | failed
    std::string error;
    std::vector<std::string> flags;
    std::map<std::string, std::string> annotations;
    std::vector<TraceEntry> trace;
    std::map<std::string, double> timings_ms;

    bool operator==(const RunRecord&) const = default;
};

std::string_view to_string(TaskKind kind) noexcept;
std::string_view to_string(VerdictLabel label) noexcept;
std::string_view to_string(Role role) noexcept;
std::string_view to_string(DecompositionMode mode) noexcept;
std::string_view to_string(ProductionMode mode) noexcept;

/// Inverse of to_string; throw ConfigError on unknown names.
TaskKind parse_task_kind(std::string_view name);
VerdictLabel parse_verdict_label(std::string_view name);
Role parse_role(std::string_view name);
DecompositionMode parse_decomposition_mode(std::string_view name);
ProductionMode parse_production_mode(std::string_view name);

}  // namespace selfendorse
