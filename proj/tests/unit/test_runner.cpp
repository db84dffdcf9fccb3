#include "selfendorse/errors.hpp"
#include "selfendorse/runner.hpp"
#include "selfendorse/scripted_backend.hpp"
#include "selfendorse/serialize.hpp"
#include "selfendorse/sim_world.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace selfendorse;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path)
{
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

/// A demo world recorded once for the whole suite.
class RunnerTest : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        root_ = fs::temp_directory_path() / "selfendorse_runner_test";
        fs::remove_all(root_);
        write_demo(root_ / "demo", 3, 1);
    }
    static void TearDownTestSuite() { fs::remove_all(root_); }

    RunManifest manifest(const std::string& run_id, const std::string& out = "out") const
    {
        RunManifest m;
        m.run_id = run_id;
        m.method = Method::endorse_regenerate;
        m.dataset = root_ / "demo" / "entities.txt";
        m.task_kind = TaskKind::longform;
        m.config.alpha = 0.8;
        m.backend = BackendSpec::scripted(root_ / "demo" / "script.jsonl");
        m.output_dir = root_ / out;
        m.fact_bank = root_ / "demo" / "facts.jsonl";
        return m;
    }

    static inline fs::path root_;
};

}  // namespace

TEST(Method, NamesRoundTrip)
{
    for (auto m : {Method::endorse_select, Method::endorse_regenerate, Method::sc, Method::usc, Method::cove,
                   Method::refine, Method::base}) {
        EXPECT_EQ(parse_method(to_string(m)), m);
    }
    EXPECT_EQ(to_string(Method::endorse_regenerate), "endorse-regenerate");
    EXPECT_THROW(parse_method("magic"), ConfigError);
}

TEST(ApplyAxis, ParsesAndValidates)
{
    PipelineConfig c;
    apply_axis(c, SweepAxis::alpha, "0.4");
    EXPECT_DOUBLE_EQ(c.alpha, 0.4);
    apply_axis(c, SweepAxis::k, "ALL");
    EXPECT_FALSE(c.context_k.has_value());
    apply_axis(c, SweepAxis::k, "5");
    EXPECT_EQ(c.context_k, 5);
    apply_axis(c, SweepAxis::n, "4");
    EXPECT_EQ(c.n_candidates, 4);
    apply_axis(c, SweepAxis::m, "2");
    EXPECT_EQ(c.effective_m(), 2);
    EXPECT_THROW(apply_axis(c, SweepAxis::alpha, "1.5"), ConfigError);
    EXPECT_THROW(apply_axis(c, SweepAxis::n, "three"), ConfigError);
    EXPECT_THROW(parse_sweep_axis("temperature"), ConfigError);
}

TEST_F(RunnerTest, ManifestRoundTripAndValidation)
{
    auto m = manifest("roundtrip");
    m.sample_size = 2;
    m.config.context_k = std::nullopt;
    m.example_status["bio-0000"] = "complete";
    const auto path = root_ / "manifest.json";
    m.save(path);
    const auto loaded = RunManifest::load(path);
    EXPECT_EQ(Json(loaded), Json(m));
    EXPECT_EQ(loaded.config, m.config);

    auto bad = m;
    bad.method = Method::sc;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = m;
    bad.dataset = root_ / "missing.txt";
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = m;
    bad.run_id = "a/b";
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = m;
    bad.config.alpha = -0.1;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST_F(RunnerTest, RunsResumeAndRecomputeFromRecords)
{
    const auto m = manifest("resume");
    const auto first = run(m);
    EXPECT_EQ(first.executed, 3u);
    EXPECT_EQ(first.failed, 0u);
    ASSERT_EQ(first.records.size(), 3u);
    ASSERT_TRUE(first.report.fact_acc.has_value());
    const auto report_json = slurp(m.run_dir() / "report.json");
    EXPECT_TRUE(fs::exists(m.run_dir() / "report.txt"));
    const auto saved = RunManifest::load(m.run_dir() / "manifest.json");
    EXPECT_EQ(saved.sampled_ids.size(), 3u);
    for (const auto& [id, status] : saved.example_status) EXPECT_EQ(status, "complete") << id;

    const auto second = run(m);
    EXPECT_EQ(second.executed, 0u);
    EXPECT_EQ(slurp(m.run_dir() / "report.json"), report_json);

    // Every reported number comes back from the persisted records alone.
    std::vector<RunRecord> records;
    for (const auto& id : saved.sampled_ids) records.push_back(read_run_records(m.record_path(id)).back());
    auto judge = OracleJudge::from_file(m.fact_bank);
    const auto examples = load_dataset(m.dataset, m.task_kind);
    EXPECT_EQ(report_to_json(report_from_records(records, examples, &judge)).dump(2) + "\n", report_json);

    // A failed last record is re-run.
    auto failed = records[1];
    failed.status = "failed";
    append_run_record(m.record_path(saved.sampled_ids[1]), failed);
    const auto third = run(m);
    EXPECT_EQ(third.executed, 1u);
    EXPECT_EQ(slurp(m.run_dir() / "report.json"), report_json);
}

TEST_F(RunnerTest, IndependentRunsAreIdenticalModuloTimings)
{
    const auto a = run(manifest("det", "det_a"));
    const auto b = run(manifest("det", "det_b"));
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(to_jsonl_line_without_timings(a.records[i]), to_jsonl_line_without_timings(b.records[i]));
        EXPECT_TRUE(a.records[i].selected_facts.has_value());
        EXPECT_GT(a.records[i].timings_ms.at("total"), 0.0);
    }
}

TEST_F(RunnerTest, SampleSubsetIsPinned)
{
    auto m = manifest("subset");
    m.sample_size = 2;
    m.sample_seed = 3;
    const auto result = run(m);
    EXPECT_EQ(result.records.size(), 2u);
    EXPECT_EQ(RunManifest::load(m.run_dir() / "manifest.json").sampled_ids.size(), 2u);
}

TEST_F(RunnerTest, SelectRecordsTheChosenCandidate)
{
    auto m = manifest("select");
    m.method = Method::endorse_select;
    const auto result = run(m);
    for (const auto& r : result.records) {
        ASSERT_TRUE(r.annotations.contains("selected_candidate"));
        const auto idx = std::stoul(r.annotations.at("selected_candidate"));
        EXPECT_EQ(r.final_response, r.candidates.at(idx).text);
        EXPECT_EQ(r.final_facts.size(), r.candidates.at(idx).facts.size());
    }
}

TEST_F(RunnerTest, AlphaSweepReusesUpstreamCalls)
{
    const auto rows = sweep(manifest("sweep"), SweepAxis::alpha, {"0", "0.2", "0.4", "0.6", "0.8", "1"});
    ASSERT_EQ(rows.size(), 6u);
    const auto upstream = [](const SweepRow& row) {
        long total = 0;
        for (const char* stage : {"sample", "decompose", "verify"}) {
            if (row.stage_calls.contains(stage)) total += row.stage_calls.at(stage);
        }
        return total;
    };
    EXPECT_GT(upstream(rows[0]), 0);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(upstream(rows[i]), 0) << rows[i].value;

    const auto single = run(manifest("single", "single_out"));
    long single_upstream = 0;
    for (const auto& r : single.records) {
        for (const auto& t : r.trace) {
            if (!t.cache_hit && (t.stage == "sample" || t.stage == "decompose" || t.stage == "verify")) {
                ++single_upstream;
            }
        }
    }
    EXPECT_EQ(upstream(rows[0]), single_upstream);

    const auto table = sweep_table(SweepAxis::alpha, rows);
    EXPECT_NE(table.find("0.6"), std::string::npos);
    EXPECT_EQ(sweep_to_json(SweepAxis::alpha, rows)["rows"].size(), 6u);
    EXPECT_TRUE(fs::exists(root_ / "out" / "sweep-alpha0.4" / "report.json"));
}

TEST_F(RunnerTest, TransportFailuresAreRecorded)
{
    auto m = manifest("down");
    m.backend = BackendSpec::http("http://127.0.0.1:9/v1", "m");
    m.sample_size = 1;
    const auto result = run(m);
    EXPECT_EQ(result.failed, 1u);
    EXPECT_EQ(result.transport_failures, 1u);
    EXPECT_EQ(result.records[0].status, "failed");

    m.strict = true;
    m.run_id = "down-strict";
    EXPECT_THROW(run(m), TransportError);
}
