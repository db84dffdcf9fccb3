#include "selfendorse/types.hpp"

#include "selfendorse/errors.hpp"

#include <string>

namespace selfendorse {

namespace {

void require(bool ok, const char* what)
{
    if (!ok) {
        throw ConfigError(std::string("invalid pipeline config: ") + what);
    }
}

bool unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void PipelineConfig::validate() const
{
    require(n_candidates >= 2, "n_candidates must be >= 2");
    require(!context_k || *context_k >= 1, "context_k must be >= 1 or ALL");
    require(unit(alpha), "alpha must lie in [0, 1]");
    require(!m_candidates || (*m_candidates >= 1 && *m_candidates <= n_candidates),
            "m_candidates must lie in [1, n_candidates]");
    require(temperature >= 0.0, "temperature must be >= 0");
    require(top_p > 0.0 && top_p <= 1.0, "top_p must lie in (0, 1]");
    require(max_tokens > 0, "max_tokens must be positive");
    require(unit(verdict_weights.true_weight) && unit(verdict_weights.false_weight) &&
                unit(verdict_weights.inconclusive_weight),
            "verdict weights must lie in [0, 1]");
    require(verdict_weights.false_weight <= verdict_weights.inconclusive_weight &&
                verdict_weights.inconclusive_weight <= verdict_weights.true_weight,
            "verdict weights must satisfy false <= inconclusive <= true");
    require(cluster_policy.kind == ClusterPolicy::Kind::dynamic_avg || cluster_policy.fixed_count >= 1,
            "fixed cluster count must be >= 1");
    require(bm25.k1 > 0.0, "bm25 k1 must be positive");
    require(unit(bm25.b), "bm25 b must lie in [0, 1]");
}

std::string_view to_string(TaskKind kind) noexcept
{
    switch (kind) {
    case TaskKind::longform: return "longform";
    case TaskKind::short_qa: return "short_qa";
    case TaskKind::math: return "math";
    }
    return "longform";
}

std::string_view to_string(VerdictLabel label) noexcept
{
    switch (label) {
    case VerdictLabel::True: return "true";
    case VerdictLabel::False: return "false";
    case VerdictLabel::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

std::string_view to_string(Role role) noexcept
{
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(DecompositionMode mode) noexcept
{
    return mode == DecompositionMode::prompt ? "prompt" : "sentence";
}

std::string_view to_string(ProductionMode mode) noexcept
{
    return mode == ProductionMode::select ? "select" : "regenerate";
}

TaskKind parse_task_kind(std::string_view name)
{
    if (name == "longform" || name == "bio" || name == "biographies") return TaskKind::longform;
    if (name == "short_qa" || name == "triviaqa" || name == "qa") return TaskKind::short_qa;
    if (name == "math" || name == "gsm8k") return TaskKind::math;
    throw ConfigError("unknown task kind: " + std::string(name));
}

VerdictLabel parse_verdict_label(std::string_view name)
{
    if (name == "true") return VerdictLabel::True;
    if (name == "false") return VerdictLabel::False;
    if (name == "inconclusive") return VerdictLabel::Inconclusive;
    throw ConfigError("unknown verdict label: " + std::string(name));
}

Role parse_role(std::string_view name)
{
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    throw ConfigError("unknown role: " + std::string(name));
}

DecompositionMode parse_decomposition_mode(std::string_view name)
{
    if (name == "prompt") return DecompositionMode::prompt;
    if (name == "sentence") return DecompositionMode::sentence;
    throw ConfigError("unknown decomposition mode: " + std::string(name));
}

ProductionMode parse_production_mode(std::string_view name)
{
    if (name == "select") return ProductionMode::select;
    if (name == "regenerate") return ProductionMode::regenerate;
    throw ConfigError("unknown production mode: " + std::string(name));
}

}  // namespace selfendorse
