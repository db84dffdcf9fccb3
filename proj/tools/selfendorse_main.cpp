// selfendorse: run, sweep and report self-endorsement experiments.

#include "selfendorse/chat.hpp"
#include "selfendorse/errors.hpp"
#include "selfendorse/prompt_catalog.hpp"
#include "selfendorse/runner.hpp"
#include "selfendorse/sim_world.hpp"
#include "selfendorse/text.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

using namespace selfendorse;

namespace {

enum ExitCode { kOk = 0, kPartial = 1, kConfig = 2, kUnreachable = 3 };

struct Flags {
    std::string method = "endorse-regenerate";
    std::string dataset;
    std::string task = "longform";
    std::string backend;
    std::string model;
    std::string api_key_env;
    int n = 10;
    std::string k = "3";
    double alpha = 1.0;
    int m = 0;
    double temperature = 1.0;
    double top_p = 0.95;
    int max_tokens = 1024;
    std::uint64_t seed = 0;
    std::string decomposition = "prompt";
    std::string cluster = "dynamic";
    std::string out = "out";
    std::string run_id;
    bool strict = false;
    int max_inflight = 8;
    std::string prompts;
    std::string fact_bank;
    std::size_t sample = 0;
    std::uint64_t sample_seed = 0;
    std::string cache;
};

void add_pipeline_flags(CLI::App& app, Flags& f)
{
    app.add_option("--method", f.method, "endorse-select | endorse-regenerate | sc | usc | cove | refine | base")
        ->capture_default_str();
    app.add_option("--dataset", f.dataset, "dataset file");
    app.add_option("--task", f.task, "longform (bio) | short_qa (triviaqa) | math (gsm8k)")->capture_default_str();
    app.add_option("--backend", f.backend, "scripted:<rules.jsonl> or an http(s) chat-completion base URL");
    app.add_option("--model", f.model, "model name for http backends");
    app.add_option("--api-key-env", f.api_key_env, "environment variable holding the bearer token");
    app.add_option("--n", f.n, "sampled candidates N")->capture_default_str();
    app.add_option("--k", f.k, "BM25 context facts K, or ALL")->capture_default_str();
    app.add_option("--alpha", f.alpha, "endorsement threshold")->capture_default_str();
    app.add_option("--m", f.m, "candidates contributing facts to regeneration (0: N)")->capture_default_str();
    app.add_option("--temperature", f.temperature, "sampling temperature")->capture_default_str();
    app.add_option("--top-p", f.top_p, "nucleus sampling mass")->capture_default_str();
    app.add_option("--max-tokens", f.max_tokens, "completion token limit")->capture_default_str();
    app.add_option("--seed", f.seed, "sampling and clustering seed")->capture_default_str();
    app.add_option("--decomposition", f.decomposition, "prompt | sentence")->capture_default_str();
    app.add_option("--clusters", f.cluster, "dynamic, or a fixed cluster count")->capture_default_str();
    app.add_option("--out", f.out, "output directory")->capture_default_str();
    app.add_option("--run-id", f.run_id, "run id (default: <method>-<dataset stem>)");
    app.add_flag("--strict", f.strict, "abort on the first failed example");
    app.add_option("--max-inflight", f.max_inflight, "concurrent backend calls")->capture_default_str();
    app.add_option("--prompts", f.prompts, "prompt catalog overriding the built-in templates");
    app.add_option("--fact-bank", f.fact_bank, "reference facts (JSONL) for the oracle judge");
    app.add_option("--sample", f.sample, "run a seeded sample of this many examples (0: all)");
    app.add_option("--sample-seed", f.sample_seed, "seed for --sample")->capture_default_str();
    app.add_option("--cache", f.cache, "persistent response cache file");
}

BackendSpec backend_from(const Flags& f)
{
    if (f.backend.empty()) throw ConfigError("--backend is required");
    constexpr std::string_view scripted = "scripted:";
    if (f.backend.rfind(scripted, 0) == 0) {
        return BackendSpec::scripted(f.backend.substr(scripted.size()));
    }
    if (f.backend.rfind("http://", 0) == 0 || f.backend.rfind("https://", 0) == 0) {
        return BackendSpec::http(f.backend, f.model, f.api_key_env);
    }
    throw ConfigError("--backend must be scripted:<path> or an http(s) URL, got '" + f.backend + "'");
}

RunManifest manifest_from(const Flags& f)
{
    RunManifest m;
    m.method = parse_method(f.method);
    m.dataset = f.dataset;
    m.task_kind = parse_task_kind(f.task);
    m.backend = backend_from(f);
    m.output_dir = f.out;
    m.strict = f.strict;
    m.max_inflight = f.max_inflight;
    m.prompts = f.prompts;
    m.fact_bank = f.fact_bank;
    m.cache = f.cache;
    if (f.sample > 0) m.sample_size = f.sample;
    m.sample_seed = f.sample_seed;

    auto& c = m.config;
    c.n_candidates = f.n;
    apply_axis(c, SweepAxis::k, f.k);
    c.alpha = f.alpha;
    if (f.m > 0) c.m_candidates = f.m;
    c.temperature = f.temperature;
    c.top_p = f.top_p;
    c.max_tokens = f.max_tokens;
    c.seed = f.seed;
    c.decomposition_mode = parse_decomposition_mode(f.decomposition);
    if (f.cluster == "dynamic") {
        c.cluster_policy = ClusterPolicy::dynamic();
    } else {
        try {
            c.cluster_policy = ClusterPolicy::fixed(std::stoi(f.cluster));
        } catch (const std::exception&) {
            throw ConfigError("--clusters must be 'dynamic' or an integer, got '" + f.cluster + "'");
        }
    }
    m.run_id = f.run_id.empty() ? sanitize_id(f.method + "-" + std::filesystem::path(f.dataset).stem().string())
                                : f.run_id;
    m.validate();
    return m;
}

int exit_code_for(const RunResult& result)
{
    if (result.failed == 0) return kOk;
    if (result.executed > 0 && result.transport_failures == result.executed) return kUnreachable;
    return kPartial;
}

std::vector<std::string> split_values(const std::string& list)
{
    std::vector<std::string> values;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto v = trim(item);
        if (!v.empty()) values.push_back(v);
    }
    return values;
}

int do_run(const Flags& f)
{
    const auto manifest = manifest_from(f);
    const auto result = run(manifest);
    std::cout << report_to_table(result.report);
    std::cout << "records: " << manifest.run_dir().string() << " (" << result.executed << " executed, "
              << result.failed << " failed)\n";
    return exit_code_for(result);
}

int do_sweep(const Flags& f, const std::string& axis_name, const std::string& values_list, bool json)
{
    const auto manifest = manifest_from(f);
    const auto axis = parse_sweep_axis(axis_name);
    const auto values = split_values(values_list);
    const auto rows = sweep(manifest, axis, values);
    const auto table = sweep_table(axis, rows);
    const auto doc = sweep_to_json(axis, rows);
    const auto base = manifest.output_dir / (manifest.run_id + "-sweep-" + std::string(to_string(axis)));
    std::ofstream(base.string() + ".txt") << table;
    std::ofstream(base.string() + ".json") << doc.dump(2) << "\n";
    std::cout << (json ? doc.dump(2) + "\n" : table);
    for (const auto& row : rows) {
        if (row.report.failed > 0) return kPartial;
    }
    return kOk;
}

int do_report(const std::string& run_dir, const std::string& fact_bank, bool json)
{
    const auto manifest = RunManifest::load(std::filesystem::path(run_dir) / "manifest.json");
    auto examples = load_dataset(manifest.dataset, manifest.task_kind);
    if (!manifest.sampled_ids.empty()) {
        std::map<std::string, Example> by_id;
        for (auto& ex : examples) by_id.emplace(ex.id, std::move(ex));
        examples.clear();
        for (const auto& id : manifest.sampled_ids) {
            if (auto it = by_id.find(id); it != by_id.end()) examples.push_back(it->second);
        }
    }
    std::vector<RunRecord> records;
    for (const auto& ex : examples) {
        const auto path = std::filesystem::path(run_dir) / (sanitize_id(ex.id) + ".jsonl");
        if (!std::filesystem::exists(path)) continue;
        auto all = read_run_records(path);
        if (!all.empty()) records.push_back(std::move(all.back()));
    }
    const auto bank = fact_bank.empty() ? manifest.fact_bank : std::filesystem::path(fact_bank);
    std::unique_ptr<OracleJudge> judge;
    if (!bank.empty()) judge = std::make_unique<OracleJudge>(OracleJudge::from_file(bank));
    const auto report = report_from_records(records, examples, judge.get());
    std::cout << (json ? report_to_json(report).dump(2) + "\n" : report_to_table(report));
    return report.failed == 0 ? kOk : kPartial;
}

int do_prompts(const std::string& file)
{
    PromptCatalog catalog;
    if (!file.empty()) catalog.merge(PromptCatalog::from_file(file));
    std::cout << catalog.dump();
    return kOk;
}

int do_hash(const std::string& text_arg)
{
    std::string text = text_arg;
    if (text.empty()) {
        text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
        if (!text.empty() && text.back() == '\n') text.pop_back();
    }
    std::cout << prompt_hash(make_request(text)) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Self-endorsement pipeline and baselines over chat-completion backends"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML file of flag values (flags given on the command line win)");

    Flags flags;
    add_pipeline_flags(app, flags);

    auto* run_cmd = app.add_subcommand("run", "run one method over a dataset")->fallthrough();

    std::string axis = "alpha";
    std::string values;
    bool sweep_json = false;
    auto* sweep_cmd = app.add_subcommand("sweep", "one run per value of a hyperparameter")->fallthrough();
    sweep_cmd->add_option("--axis", axis, "alpha | n | m | k")->capture_default_str();
    sweep_cmd->add_option("--values", values, "comma-separated values, e.g. 0,0.2,0.4,0.6,0.8,1")->required();
    sweep_cmd->add_flag("--json", sweep_json, "print the table as JSON");

    std::string report_dir;
    std::string report_bank;
    bool report_json = false;
    auto* report_cmd = app.add_subcommand("report", "recompute metrics from persisted records");
    report_cmd->add_option("run_dir", report_dir, "run directory (out/<run id>)")->required();
    report_cmd->add_option("--judge-bank", report_bank, "reference facts overriding the manifest's");
    report_cmd->add_flag("--json", report_json, "print JSON instead of a table");

    std::string prompts_file;
    auto* prompts_cmd = app.add_subcommand("prompts", "print the prompt catalog in use");
    prompts_cmd->add_option("--file", prompts_file, "catalog to merge over the built-in templates");

    std::string demo_dir = "demo";
    std::size_t demo_people = 5;
    std::uint64_t demo_seed = 0;
    auto* demo_cmd = app.add_subcommand("demo", "write a synthetic biography dataset with a recorded script");
    demo_cmd->add_option("dir", demo_dir, "output directory")->capture_default_str();
    demo_cmd->add_option("--people", demo_people, "number of entities")->capture_default_str();
    demo_cmd->add_option("--world-seed", demo_seed, "seed for names and facts")->capture_default_str();

    std::string hash_text;
    auto* hash_cmd = app.add_subcommand("hash", "prompt hash of a single-message request (for scripted rules)");
    hash_cmd->add_option("text", hash_text, "prompt text (default: stdin)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*run_cmd) return do_run(flags);
        if (*sweep_cmd) return do_sweep(flags, axis, values, sweep_json);
        if (*report_cmd) return do_report(report_dir, report_bank, report_json);
        if (*prompts_cmd) return do_prompts(prompts_file);
        if (*hash_cmd) return do_hash(hash_text);
        if (*demo_cmd) {
            write_demo(demo_dir, demo_people, demo_seed);
            std::cout << "wrote " << demo_dir << "/entities.txt, facts.jsonl, script.jsonl\n";
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kConfig;
    } catch (const TransportError& e) {
        std::cerr << "backend unreachable: " << e.what() << "\n";
        return kUnreachable;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPartial;
    }
    return kOk;
}
