#include "selfendorse/serialize.hpp"

#include "selfendorse/errors.hpp"

#include <fstream>

namespace selfendorse {

void to_json(Json& j, const Query& q)
{
    j = Json{{"id", q.id}, {"text", q.text}, {"task_kind", to_string(q.task_kind)}};
}

void from_json(const Json& j, Query& q)
{
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.task_kind = parse_task_kind(j.at("task_kind").get<std::string>());
}

void to_json(Json& j, const Verdict& v)
{
    j = Json{{"label", to_string(v.label)}, {"raw_text", v.raw_text}};
}

void from_json(const Json& j, Verdict& v)
{
    v.label = parse_verdict_label(j.at("label").get<std::string>());
    v.raw_text = j.at("raw_text").get<std::string>();
}

void to_json(Json& j, const Fact& f)
{
    Json verdicts = Json::object();
    for (const auto& [k, v] : f.verdicts) {
        verdicts[std::to_string(k)] = v;
    }
    j = Json{{"candidate_index", f.candidate_index},
             {"fact_index", f.fact_index},
             {"text", f.text},
             {"verdicts", std::move(verdicts)},
             {"score", f.score ? Json(*f.score) : Json(nullptr)}};
}

void from_json(const Json& j, Fact& f)
{
    f.candidate_index = j.at("candidate_index").get<int>();
    f.fact_index = j.at("fact_index").get<int>();
    f.text = j.at("text").get<std::string>();
    f.verdicts.clear();
    for (const auto& [k, v] : j.at("verdicts").items()) {
        f.verdicts.emplace(std::stoi(k), v.get<Verdict>());
    }
    const auto& score = j.at("score");
    f.score = score.is_null() ? std::nullopt : std::optional<double>(score.get<double>());
}

void to_json(Json& j, const Candidate& c)
{
    j = Json{{"index", c.index}, {"text", c.text}, {"facts", c.facts}};
}

void from_json(const Json& j, Candidate& c)
{
    c.index = j.at("index").get<int>();
    c.text = j.at("text").get<std::string>();
    c.facts = j.at("facts").get<std::vector<Fact>>();
}

void to_json(Json& j, const PipelineConfig& c)
{
    Json policy = c.cluster_policy.kind == ClusterPolicy::Kind::dynamic_avg
                      ? Json("dynamic_avg")
                      : Json{{"fixed", c.cluster_policy.fixed_count}};
    j = Json{{"n_candidates", c.n_candidates},
             {"context_k", c.context_k ? Json(*c.context_k) : Json("ALL")},
             {"alpha", c.alpha},
             {"m_candidates", c.m_candidates ? Json(*c.m_candidates) : Json(nullptr)},
             {"temperature", c.temperature},
             {"top_p", c.top_p},
             {"max_tokens", c.max_tokens},
             {"verdict_weights",
              {{"true", c.verdict_weights.true_weight},
               {"false", c.verdict_weights.false_weight},
               {"inconclusive", c.verdict_weights.inconclusive_weight}}},
             {"cluster_policy", std::move(policy)},
             {"seed", c.seed},
             {"decomposition_mode", to_string(c.decomposition_mode)},
             {"production_mode", to_string(c.production_mode)},
             {"bm25", {{"k1", c.bm25.k1}, {"b", c.bm25.b}}}};
}

void from_json(const Json& j, PipelineConfig& c)
{
    c.n_candidates = j.at("n_candidates").get<int>();
    const auto& k = j.at("context_k");
    c.context_k = k.is_string() ? std::nullopt : std::optional<int>(k.get<int>());
    c.alpha = j.at("alpha").get<double>();
    const auto& m = j.at("m_candidates");
    c.m_candidates = m.is_null() ? std::nullopt : std::optional<int>(m.get<int>());
    c.temperature = j.at("temperature").get<double>();
    c.top_p = j.at("top_p").get<double>();
    c.max_tokens = j.at("max_tokens").get<int>();
    const auto& w = j.at("verdict_weights");
    c.verdict_weights = {w.at("true").get<double>(), w.at("inconclusive").get<double>(),
                         w.at("false").get<double>()};
    const auto& policy = j.at("cluster_policy");
    c.cluster_policy = policy.is_string() ? ClusterPolicy::dynamic()
                                          : ClusterPolicy::fixed(policy.at("fixed").get<int>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.decomposition_mode = parse_decomposition_mode(j.at("decomposition_mode").get<std::string>());
    c.production_mode = parse_production_mode(j.at("production_mode").get<std::string>());
    c.bm25 = {j.at("bm25").at("k1").get<double>(), j.at("bm25").at("b").get<double>()};
}

void to_json(Json& j, const ChatMessage& m)
{
    j = Json{{"role", to_string(m.role)}, {"content", m.content}};
}

void from_json(const Json& j, ChatMessage& m)
{
    m.role = parse_role(j.at("role").get<std::string>());
    m.content = j.at("content").get<std::string>();
}

void to_json(Json& j, const TraceEntry& t)
{
    j = Json{{"stage", t.stage},
             {"cache_key", t.cache_key},
             {"messages", t.messages},
             {"temperature", t.temperature},
             {"seed_hint", t.seed_hint ? Json(*t.seed_hint) : Json(nullptr)},
             {"reply", t.reply},
             {"cache_hit", t.cache_hit},
             {"attempts", t.attempts}};
}

void from_json(const Json& j, TraceEntry& t)
{
    t.stage = j.at("stage").get<std::string>();
    t.cache_key = j.at("cache_key").get<std::string>();
    t.messages = j.at("messages").get<std::vector<ChatMessage>>();
    t.temperature = j.at("temperature").get<double>();
    const auto& seed = j.at("seed_hint");
    t.seed_hint = seed.is_null() ? std::nullopt : std::optional<std::int64_t>(seed.get<std::int64_t>());
    t.reply = j.at("reply").get<std::string>();
    t.cache_hit = j.at("cache_hit").get<bool>();
    t.attempts = j.at("attempts").get<int>();
}

void to_json(Json& j, const FactSet& s)
{
    Json assignments = Json::array();
    for (const auto& a : s.assignments) {
        assignments.push_back({{"candidate_index", a.candidate_index},
                               {"fact_index", a.fact_index},
                               {"cluster", a.cluster},
                               {"centroid_distance", a.centroid_distance}});
    }
    j = Json{{"facts", s.facts}, {"cluster_assignments", std::move(assignments)}};
}

void from_json(const Json& j, FactSet& s)
{
    s.facts = j.at("facts").get<std::vector<Fact>>();
    s.assignments.clear();
    for (const auto& a : j.at("cluster_assignments")) {
        s.assignments.push_back({a.at("candidate_index").get<int>(), a.at("fact_index").get<int>(),
                                 a.at("cluster").get<int>(), a.at("centroid_distance").get<double>()});
    }
}

void to_json(Json& j, const RunRecord& r)
{
    j = Json{{"run_id", r.run_id},
             {"method", r.method},
             {"query", r.query},
             {"config", r.config},
             {"candidates", r.candidates},
             {"selected_facts", r.selected_facts ? Json(*r.selected_facts) : Json(nullptr)},
             {"final_response", r.final_response},
             {"final_facts", r.final_facts},
             {"status", r.status},
             {"error", r.error},
             {"flags", r.flags},
             {"annotations", r.annotations},
             {"trace", r.trace},
             {"timings_ms", r.timings_ms}};
}

void from_json(const Json& j, RunRecord& r)
{
    r.run_id = j.at("run_id").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.query = j.at("query").get<Query>();
    r.config = j.at("config").get<PipelineConfig>();
    r.candidates = j.at("candidates").get<std::vector<Candidate>>();
    const auto& selected = j.at("selected_facts");
    r.selected_facts = selected.is_null() ? std::nullopt : std::optional<FactSet>(selected.get<FactSet>());
    r.final_response = j.at("final_response").get<std::string>();
    r.final_facts = j.at("final_facts").get<std::vector<Fact>>();
    r.status = j.at("status").get<std::string>();
    r.error = j.at("error").get<std::string>();
    r.flags = j.at("flags").get<std::vector<std::string>>();
    r.annotations = j.at("annotations").get<std::map<std::string, std::string>>();
    r.trace = j.at("trace").get<std::vector<TraceEntry>>();
    r.timings_ms = j.at("timings_ms").get<std::map<std::string, double>>();
}

std::string to_jsonl_line(const RunRecord& record)
{
    return Json(record).dump();
}

std::string to_jsonl_line_without_timings(const RunRecord& record)
{
    Json j = record;
    j.erase("timings_ms");
    return j.dump();
}

std::vector<RunRecord> read_run_records(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string(), 0);
    }
    std::vector<RunRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(Json::parse(line).get<RunRecord>());
        } catch (const Json::exception& e) {
            throw ParseError(path.string() + ": " + e.what(), line_no);
        } catch (const ConfigError& e) {
            throw ParseError(path.string() + ": " + e.what(), line_no);
        }
    }
    return records;
}

void append_run_record(const std::filesystem::path& path, const RunRecord& record)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::app);
    out << to_jsonl_line(record) << '\n';
    out.flush();
}

}  // namespace selfendorse
