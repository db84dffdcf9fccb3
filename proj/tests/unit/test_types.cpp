#include "selfendorse/errors.hpp"
#include "selfendorse/serialize.hpp"
#include "selfendorse/types.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace selfendorse;

namespace {

RunRecord sample_record()
{
    RunRecord r;
    r.run_id = "run-1";
    r.method = "endorse-regenerate";
    r.query = {"bio-0001", "Tell me a bio of Ada Lovelace", TaskKind::longform};
    r.config.context_k = std::nullopt;
    r.config.m_candidates = 4;
    r.config.cluster_policy = ClusterPolicy::fixed(6);
    r.config.seed = 1234567890123ULL;
    r.config.alpha = 0.8;
    Fact f{0, 0, "Ada Lovelace was born in 1815.", {}, 0.75};
    f.verdicts[1] = {VerdictLabel::True, "True."};
    f.verdicts[2] = {VerdictLabel::Inconclusive, "Hard to say \"maybe\"\n"};
    Fact unscored{1, 0, "She wrote notes on the éngine.", {}, std::nullopt};
    r.candidates = {{0, "Ada Lovelace was born in 1815.", {f}}, {1, "She wrote notes.", {unscored}}};
    FactSet z;
    z.facts = {f};
    z.assignments = {{0, 0, 0, 0.0}, {1, 0, 0, 0.25}};
    r.selected_facts = z;
    r.final_response = "Ada Lovelace was born in 1815.";
    r.final_facts = {f};
    r.flags = {"decompose_fallback:1"};
    r.annotations = {{"selected_candidate", "0"}};
    TraceEntry t;
    t.stage = "sample";
    t.cache_key = "abc";
    t.messages = {{Role::system, "sys"}, {Role::user, "Tell me"}};
    t.temperature = 1.0;
    t.seed_hint = 7;
    t.reply = "reply";
    t.cache_hit = true;
    t.attempts = 2;
    r.trace = {t};
    r.timings_ms = {{"sample", 1.5}};
    return r;
}

}  // namespace

TEST(PipelineConfig, DefaultsMatchSettings)
{
    PipelineConfig c;
    EXPECT_EQ(c.n_candidates, 10);
    EXPECT_EQ(c.context_k, 3);
    EXPECT_DOUBLE_EQ(c.alpha, 1.0);
    EXPECT_EQ(c.effective_m(), 10);
    EXPECT_DOUBLE_EQ(c.temperature, 1.0);
    EXPECT_DOUBLE_EQ(c.verdict_weights[VerdictLabel::True], 1.0);
    EXPECT_DOUBLE_EQ(c.verdict_weights[VerdictLabel::Inconclusive], 0.5);
    EXPECT_DOUBLE_EQ(c.verdict_weights[VerdictLabel::False], 0.0);
    EXPECT_NO_THROW(c.validate());
}

TEST(PipelineConfig, MathAlwaysDecomposesBySentence)
{
    PipelineConfig c;
    c.decomposition_mode = DecompositionMode::prompt;
    EXPECT_EQ(c.decomposition_for(TaskKind::math), DecompositionMode::sentence);
    EXPECT_EQ(c.decomposition_for(TaskKind::longform), DecompositionMode::prompt);
    EXPECT_EQ(c.decomposition_for(TaskKind::short_qa), DecompositionMode::prompt);
}

TEST(PipelineConfig, ValidateRejectsEachViolation)
{
    auto expect_bad = [](auto mutate) {
        PipelineConfig c;
        mutate(c);
        EXPECT_THROW(c.validate(), ConfigError);
    };
    expect_bad([](PipelineConfig& c) { c.n_candidates = 1; });
    expect_bad([](PipelineConfig& c) { c.context_k = 0; });
    expect_bad([](PipelineConfig& c) { c.alpha = -0.1; });
    expect_bad([](PipelineConfig& c) { c.alpha = 1.1; });
    expect_bad([](PipelineConfig& c) { c.m_candidates = 11; });
    expect_bad([](PipelineConfig& c) { c.m_candidates = 0; });
    expect_bad([](PipelineConfig& c) { c.temperature = -1.0; });
    expect_bad([](PipelineConfig& c) { c.top_p = 0.0; });
    expect_bad([](PipelineConfig& c) { c.max_tokens = 0; });
    expect_bad([](PipelineConfig& c) { c.verdict_weights = {0.4, 0.5, 0.0}; });  // inconclusive above true
    expect_bad([](PipelineConfig& c) { c.verdict_weights = {1.0, 0.1, 0.2}; });  // false above inconclusive
    expect_bad([](PipelineConfig& c) { c.verdict_weights = {1.5, 0.5, 0.0}; });
    expect_bad([](PipelineConfig& c) { c.cluster_policy = ClusterPolicy::fixed(0); });
    expect_bad([](PipelineConfig& c) { c.bm25.k1 = 0.0; });
    expect_bad([](PipelineConfig& c) { c.bm25.b = 1.5; });
}

TEST(PipelineConfig, BoundaryValuesAreValid)
{
    PipelineConfig c;
    c.n_candidates = 2;
    c.context_k = 1;
    c.alpha = 0.0;
    c.m_candidates = 2;
    c.temperature = 0.0;
    EXPECT_NO_THROW(c.validate());
    c.alpha = 1.0;
    c.m_candidates = 1;
    c.context_k = std::nullopt;
    EXPECT_NO_THROW(c.validate());
}

TEST(Names, RoundTripAndAliases)
{
    for (auto k : {TaskKind::longform, TaskKind::short_qa, TaskKind::math}) {
        EXPECT_EQ(parse_task_kind(to_string(k)), k);
    }
    for (auto v : {VerdictLabel::True, VerdictLabel::False, VerdictLabel::Inconclusive}) {
        EXPECT_EQ(parse_verdict_label(to_string(v)), v);
    }
    for (auto r : {Role::system, Role::user, Role::assistant}) {
        EXPECT_EQ(parse_role(to_string(r)), r);
    }
    EXPECT_EQ(parse_task_kind("bio"), TaskKind::longform);
    EXPECT_EQ(parse_task_kind("triviaqa"), TaskKind::short_qa);
    EXPECT_EQ(parse_task_kind("gsm8k"), TaskKind::math);
    EXPECT_THROW(parse_task_kind("poetry"), ConfigError);
    EXPECT_EQ(parse_decomposition_mode("sentence"), DecompositionMode::sentence);
    EXPECT_EQ(parse_production_mode("select"), ProductionMode::select);
    EXPECT_THROW(parse_production_mode("mix"), ConfigError);
}

TEST(Serialize, RunRecordRoundTripsLosslessly)
{
    const auto r = sample_record();
    const auto line = to_jsonl_line(r);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    const auto back = Json::parse(line).get<RunRecord>();
    EXPECT_EQ(back, r);
    EXPECT_EQ(to_jsonl_line(back), line);
}

TEST(Serialize, EncodingsOfOptionalKnobs)
{
    const Json j = sample_record().config;
    EXPECT_EQ(j.at("context_k"), "ALL");
    EXPECT_EQ(j.at("cluster_policy").at("fixed"), 6);
    EXPECT_EQ(j.at("m_candidates"), 4);
    PipelineConfig def;
    const Json d = def;
    EXPECT_EQ(d.at("context_k"), 3);
    EXPECT_EQ(d.at("cluster_policy"), "dynamic_avg");
    EXPECT_TRUE(d.at("m_candidates").is_null());
    EXPECT_EQ(d.get<PipelineConfig>(), def);
}

TEST(Serialize, WithoutTimingsDropsOnlyTimings)
{
    auto a = sample_record();
    auto b = a;
    b.timings_ms["sample"] = 99.0;
    EXPECT_NE(to_jsonl_line(a), to_jsonl_line(b));
    EXPECT_EQ(to_jsonl_line_without_timings(a), to_jsonl_line_without_timings(b));
}

TEST(Serialize, AppendAndReadBack)
{
    const auto dir = std::filesystem::temp_directory_path() / "selfendorse_types_test";
    std::filesystem::remove_all(dir);
    const auto path = dir / "run" / "q.jsonl";
    auto r = sample_record();
    append_run_record(path, r);
    r.status = "failed";
    append_run_record(path, r);
    const auto records = read_run_records(path);
    ASSERT_EQ(records.size(), 2u);
    EXPECT_EQ(records[0].status, "complete");
    EXPECT_EQ(records[1], r);

    std::ofstream(path, std::ios::app) << "{not json\n";
    try {
        read_run_records(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::filesystem::remove_all(dir);
}
