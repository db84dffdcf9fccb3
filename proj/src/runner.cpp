#include "selfendorse/runner.hpp"

#include "selfendorse/baselines.hpp"
#include "selfendorse/decompose.hpp"
#include "selfendorse/endorse.hpp"
#include "selfendorse/errors.hpp"
#include "selfendorse/produce.hpp"
#include "selfendorse/text.hpp"

#include <fmt/format.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace selfendorse {

namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::endorse_select, "endorse-select"},
    {Method::endorse_regenerate, "endorse-regenerate"},
    {Method::sc, "sc"},
    {Method::usc, "usc"},
    {Method::cove, "cove"},
    {Method::refine, "refine"},
    {Method::base, "base"},
};

constexpr std::pair<SweepAxis, std::string_view> kAxisNames[] = {
    {SweepAxis::alpha, "alpha"},
    {SweepAxis::n, "n"},
    {SweepAxis::m, "m"},
    {SweepAxis::k, "k"},
};

class StageClock {
public:
    explicit StageClock(std::map<std::string, double>& sink) : sink_(sink) {}

    template <typename F>
    auto time(const std::string& stage, F&& body)
    {
        const auto start = std::chrono::steady_clock::now();
        struct Stop {
            std::map<std::string, double>& sink;
            const std::string& stage;
            std::chrono::steady_clock::time_point start;
            ~Stop()
            {
                sink[stage] +=
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            }
        } stop{sink_, stage, start};
        return body();
    }

private:
    std::map<std::string, double>& sink_;
};

std::vector<Fact> evaluate_decomposition(const std::string& text, const Query& query, const PipelineConfig& config,
                                         Gateway& gateway, CallTrace& trace, std::vector<std::string>& flags,
                                         const PromptCatalog& prompts)
{
    std::vector<Candidate> one{Candidate{0, text, {}}};
    decompose_all(one, config.decomposition_for(query.task_kind), gateway, trace, flags, prompts, config.max_tokens,
                  "evaluate_decompose");
    return std::move(one.front().facts);
}

void run_endorse(RunRecord& r, Method method, Gateway& gateway, const PromptCatalog& prompts, StageClock& clock)
{
    const auto& config = r.config;
    SamplingOptions sampling{config.top_p, config.max_tokens, config.seed, sampling_prompt(r.query, prompts)};
    r.candidates = clock.time("sample", [&] {
        return sample_candidates(r.query, config.n_candidates, config.temperature, gateway, r.trace, sampling);
    });
    clock.time("decompose", [&] {
        decompose_all(r.candidates, config.decomposition_for(r.query.task_kind), gateway, r.trace, r.flags, prompts,
                      config.max_tokens);
    });
    if (method == Method::base) {
        r.final_response = r.candidates.front().text;
        r.final_facts = r.candidates.front().facts;
        return;
    }
    clock.time("verify", [&] { endorse_all(r.candidates, config, gateway, r.trace, r.flags, prompts); });

    auto produce_config = config;
    produce_config.production_mode =
        method == Method::endorse_select ? ProductionMode::select : ProductionMode::regenerate;
    const auto production =
        clock.time("produce", [&] { return produce(r.query, r.candidates, produce_config, gateway, r.trace, prompts); });
    r.final_response = production.text;
    r.selected_facts = production.fact_set;
    if (production.fell_back_to_selection) r.flags.push_back("regenerate_fallback_selection");
    if (production.selected_candidate) {
        const auto idx = static_cast<std::size_t>(*production.selected_candidate);
        r.annotations["selected_candidate"] = std::to_string(idx);
        r.final_facts = r.candidates[idx].facts;
        return;
    }
    r.final_facts = clock.time("evaluate", [&] {
        return evaluate_decomposition(r.final_response, r.query, config, gateway, r.trace, r.flags, prompts);
    });
}

void run_baseline(RunRecord& r, Method method, Gateway& gateway, const PromptCatalog& prompts, StageClock& clock)
{
    const auto& config = r.config;
    BaselineOptions options{config.temperature, config.top_p, config.max_tokens, config.seed, prompts};
    auto result = clock.time("method", [&] {
        switch (method) {
        case Method::sc: return self_consistency(r.query, config.n_candidates, gateway, r.trace, options);
        case Method::usc: return universal_self_consistency(r.query, config.n_candidates, gateway, r.trace, options);
        case Method::cove: return chain_of_verification(r.query, gateway, r.trace, options);
        default: return refine(r.query, gateway, r.trace, options);
        }
    });
    r.final_response = std::move(result.text);
    r.candidates = std::move(result.candidates);
    r.flags.insert(r.flags.end(), result.flags.begin(), result.flags.end());
    r.annotations.insert(result.annotations.begin(), result.annotations.end());
    r.final_facts = clock.time("evaluate", [&] {
        return evaluate_decomposition(r.final_response, r.query, config, gateway, r.trace, r.flags, prompts);
    });
}

/// Last record of an example file that parses; lines cut short by an
/// interrupted write are skipped.
std::optional<RunRecord> last_record(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::optional<RunRecord> last;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            last = Json::parse(line).get<RunRecord>();
        } catch (const std::exception&) {
            // incomplete line
        }
    }
    return last;
}

std::string path_string(const std::filesystem::path& p)
{
    return p.string();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

std::string cell(const std::optional<double>& v)
{
    return v ? fmt::format("{:.4f}", *v) : std::string("-");
}

}  // namespace

std::string_view to_string(Method method) noexcept
{
    for (const auto& [m, name] : kMethodNames) {
        if (m == method) return name;
    }
    return "base";
}

Method parse_method(std::string_view name)
{
    for (const auto& [m, n] : kMethodNames) {
        if (n == name) return m;
    }
    throw ConfigError("unknown method '" + std::string(name) +
                      "' (expected endorse-select, endorse-regenerate, sc, usc, cove, refine or base)");
}

std::string_view to_string(SweepAxis axis) noexcept
{
    for (const auto& [a, name] : kAxisNames) {
        if (a == axis) return name;
    }
    return "alpha";
}

SweepAxis parse_sweep_axis(std::string_view name)
{
    for (const auto& [a, n] : kAxisNames) {
        if (n == name) return a;
    }
    throw ConfigError("unknown sweep axis '" + std::string(name) + "' (expected alpha, n, m or k)");
}

RunRecord run_query(const Query& query, Method method, const PipelineConfig& config, Gateway& gateway,
                    const PromptCatalog& prompts, const std::string& run_id)
{
    RunRecord r;
    r.run_id = run_id;
    r.method = std::string(to_string(method));
    r.query = query;
    r.config = config;
    StageClock clock(r.timings_ms);
    const auto start = std::chrono::steady_clock::now();
    try {
        config.validate();
        switch (method) {
        case Method::endorse_select:
        case Method::endorse_regenerate:
        case Method::base: run_endorse(r, method, gateway, prompts, clock); break;
        default: run_baseline(r, method, gateway, prompts, clock); break;
        }
        r.status = "complete";
    } catch (const TransportError& e) {
        r.status = "failed";
        r.error = e.what();
        r.flags.push_back("transport_error");
    } catch (const Error& e) {
        r.status = "failed";
        r.error = e.what();
    }
    r.timings_ms["total"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// ---- manifest ---------------------------------------------------------------

void to_json(Json& j, const BackendSpec& b)
{
    if (b.kind == BackendSpec::Kind::scripted) {
        j = Json{{"kind", "scripted"}, {"script", path_string(b.script_path)}};
    } else {
        j = Json{{"kind", "http"}, {"endpoint", b.endpoint}, {"model", b.model}, {"auth_env", b.auth_env}};
    }
}

void from_json(const Json& j, BackendSpec& b)
{
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "scripted") {
        b = BackendSpec::scripted(j.at("script").get<std::string>());
    } else if (kind == "http") {
        b = BackendSpec::http(j.at("endpoint").get<std::string>(), j.value("model", std::string()),
                              j.value("auth_env", std::string()));
    } else {
        throw ConfigError("unknown backend kind '" + kind + "'");
    }
}

void to_json(Json& j, const RunManifest& m)
{
    j = Json{{"run_id", m.run_id},
             {"method", to_string(m.method)},
             {"dataset", path_string(m.dataset)},
             {"task_kind", to_string(m.task_kind)},
             {"config", m.config},
             {"backend", m.backend},
             {"output_dir", path_string(m.output_dir)},
             {"sample_size", m.sample_size ? Json(*m.sample_size) : Json(nullptr)},
             {"sample_seed", m.sample_seed},
             {"fact_bank", path_string(m.fact_bank)},
             {"prompts", path_string(m.prompts)},
             {"cache", path_string(m.cache)},
             {"max_inflight", m.max_inflight},
             {"strict", m.strict},
             {"sampled_ids", m.sampled_ids},
             {"example_status", m.example_status}};
}

void from_json(const Json& j, RunManifest& m)
{
    m.run_id = j.at("run_id").get<std::string>();
    m.method = parse_method(j.at("method").get<std::string>());
    m.dataset = j.at("dataset").get<std::string>();
    m.task_kind = parse_task_kind(j.at("task_kind").get<std::string>());
    m.config = j.at("config").get<PipelineConfig>();
    m.backend = j.at("backend").get<BackendSpec>();
    m.output_dir = j.at("output_dir").get<std::string>();
    const auto& sample = j.at("sample_size");
    m.sample_size = sample.is_null() ? std::nullopt : std::optional<std::size_t>(sample.get<std::size_t>());
    m.sample_seed = j.value("sample_seed", std::uint64_t{0});
    m.fact_bank = j.value("fact_bank", std::string());
    m.prompts = j.value("prompts", std::string());
    m.cache = j.value("cache", std::string());
    m.max_inflight = j.value("max_inflight", 8);
    m.strict = j.value("strict", false);
    m.sampled_ids = j.value("sampled_ids", std::vector<std::string>{});
    m.example_status = j.value("example_status", std::map<std::string, std::string>{});
}

std::filesystem::path RunManifest::record_path(const std::string& example_id) const
{
    return run_dir() / (sanitize_id(example_id) + ".jsonl");
}

void RunManifest::validate() const
{
    if (run_id.empty()) throw ConfigError("run id is empty");
    if (sanitize_id(run_id) != run_id) {
        throw ConfigError("run id '" + run_id + "' may only contain letters, digits, '-', '_' and '.'");
    }
    if (dataset.empty()) throw ConfigError("no dataset given");
    if (!std::filesystem::exists(dataset)) throw ConfigError("dataset not found: " + dataset.string());
    if (max_inflight < 1) throw ConfigError("max_inflight must be >= 1");
    if (sample_size && *sample_size == 0) throw ConfigError("sample size must be >= 1");
    if (!fact_bank.empty() && !std::filesystem::exists(fact_bank)) {
        throw ConfigError("fact bank not found: " + fact_bank.string());
    }
    if (!prompts.empty() && !std::filesystem::exists(prompts)) {
        throw ConfigError("prompt catalog not found: " + prompts.string());
    }
    if ((method == Method::sc) && task_kind != TaskKind::math) {
        throw ConfigError("method sc needs a math dataset");
    }
    config.validate();
    backend.validate();
}

void RunManifest::save(const std::filesystem::path& path) const
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_text(path, Json(*this).dump(2) + "\n");
}

RunManifest RunManifest::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path.string());
    try {
        return Json::parse(in).get<RunManifest>();
    } catch (const Json::exception& e) {
        throw ConfigError("bad manifest " + path.string() + ": " + e.what());
    }
}

PromptCatalog load_prompts(const RunManifest& manifest)
{
    PromptCatalog catalog;
    if (!manifest.prompts.empty()) catalog.merge(PromptCatalog::from_file(manifest.prompts));
    return catalog;
}

std::shared_ptr<Gateway> make_gateway(const RunManifest& manifest)
{
    auto cache = manifest.cache.empty() ? std::make_shared<ResponseCache>()
                                        : std::make_shared<ResponseCache>(manifest.cache);
    GatewayOptions options;
    options.max_inflight = manifest.max_inflight;
    return std::make_shared<Gateway>(make_backend(manifest.backend), options, std::move(cache));
}

// ---- run --------------------------------------------------------------------

MetricsReport report_from_records(const std::vector<RunRecord>& records, const std::vector<Example>& examples,
                                  FactJudge* judge)
{
    std::map<std::string, const RunRecord*> by_id;
    for (const auto& r : records) by_id[r.query.id] = &r;
    std::vector<ExampleMetrics> rows;
    rows.reserve(examples.size());
    for (const auto& ex : examples) {
        const auto it = by_id.find(ex.query.id);
        if (it == by_id.end()) {
            ExampleMetrics missing;
            missing.id = ex.id;
            missing.status = "missing";
            rows.push_back(std::move(missing));
            continue;
        }
        try {
            rows.push_back(example_metrics(*it->second, ex, judge));
        } catch (const JudgeUnavailable&) {
            rows.push_back(example_metrics(*it->second, ex, nullptr));
        }
    }
    return aggregate(std::move(rows));
}

RunResult run(RunManifest manifest, std::shared_ptr<Gateway> gateway)
{
    manifest.validate();
    const auto prompts = load_prompts(manifest);
    if (!gateway) gateway = make_gateway(manifest);

    auto examples = load_dataset(manifest.dataset, manifest.task_kind);
    if (manifest.sample_size) examples = sample_examples(examples, *manifest.sample_size, manifest.sample_seed);
    manifest.sampled_ids.clear();
    for (const auto& ex : examples) manifest.sampled_ids.push_back(ex.id);

    std::filesystem::create_directories(manifest.run_dir());
    std::vector<std::optional<RunRecord>> records(examples.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        auto previous = last_record(manifest.record_path(examples[i].id));
        if (previous && previous->status == "complete") {
            records[i] = std::move(previous);
        } else {
            pending.push_back(i);
        }
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        manifest.example_status[examples[i].id] = records[i] ? "complete" : "pending";
    }
    manifest.save(manifest.run_dir() / "manifest.json");

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mutex;
    std::exception_ptr strict_error;
    auto worker = [&] {
        while (!stop.load()) {
            const auto slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            const auto i = pending[slot];
            auto record = run_query(examples[i].query, manifest.method, manifest.config, *gateway, prompts,
                                    manifest.run_id);
            append_run_record(manifest.record_path(examples[i].id), record);
            if (manifest.strict && record.status != "complete") {
                std::lock_guard lock(error_mutex);
                if (!strict_error) {
                    const bool transport =
                        std::find(record.flags.begin(), record.flags.end(), "transport_error") != record.flags.end();
                    const auto message = examples[i].id + ": " + record.error;
                    strict_error = transport ? std::make_exception_ptr(TransportError(message))
                                             : std::make_exception_ptr(Error(message));
                }
                stop.store(true);
            }
            records[i] = std::move(record);
        }
    };
    {
        const auto workers = std::min<std::size_t>(pending.size(), static_cast<std::size_t>(manifest.max_inflight));
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    RunResult result;
    result.executed = pending.size();
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& id = examples[i].id;
        if (!records[i]) {
            manifest.example_status[id] = "pending";
            continue;
        }
        manifest.example_status[id] = records[i]->status;
        if (records[i]->status != "complete") {
            ++result.failed;
            const auto& flags = records[i]->flags;
            if (std::find(flags.begin(), flags.end(), "transport_error") != flags.end()) ++result.transport_failures;
        }
        result.records.push_back(*records[i]);
    }
    manifest.save(manifest.run_dir() / "manifest.json");
    if (strict_error) std::rethrow_exception(strict_error);

    std::unique_ptr<OracleJudge> judge;
    if (!manifest.fact_bank.empty()) {
        judge = std::make_unique<OracleJudge>(OracleJudge::from_file(manifest.fact_bank));
    }
    result.report = report_from_records(result.records, examples, judge.get());
    write_text(manifest.run_dir() / "report.json", report_to_json(result.report).dump(2) + "\n");
    write_text(manifest.run_dir() / "report.txt", report_to_table(result.report));
    return result;
}

// ---- sweep ------------------------------------------------------------------

void apply_axis(PipelineConfig& config, SweepAxis axis, std::string_view value)
{
    const auto text = trim(value);
    auto as_int = [&] {
        int v = 0;
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || end != text.data() + text.size()) {
            throw ConfigError("expected an integer for " + std::string(to_string(axis)) + ", got '" + text + "'");
        }
        return v;
    };
    switch (axis) {
    case SweepAxis::alpha: {
        double v = 0.0;
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || end != text.data() + text.size()) {
            throw ConfigError("expected a number for alpha, got '" + text + "'");
        }
        config.alpha = v;
        break;
    }
    case SweepAxis::n: config.n_candidates = as_int(); break;
    case SweepAxis::m: config.m_candidates = as_int(); break;
    case SweepAxis::k:
        if (to_lower_ascii(text) == "all") {
            config.context_k = std::nullopt;
        } else {
            config.context_k = as_int();
        }
        break;
    }
    config.validate();
}

std::vector<SweepRow> sweep(const RunManifest& manifest, SweepAxis axis, const std::vector<std::string>& values)
{
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<RunManifest> runs;
    for (const auto& value : values) {
        auto m = manifest;
        apply_axis(m.config, axis, value);
        m.run_id = sanitize_id(manifest.run_id + "-" + std::string(to_string(axis)) + trim(value));
        m.example_status.clear();
        runs.push_back(std::move(m));
    }
    manifest.validate();
    auto gateway = make_gateway(manifest);

    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto before = gateway->backend_calls();
        auto result = run(runs[i], gateway);
        SweepRow row;
        row.value = trim(values[i]);
        row.report = std::move(result.report);
        row.backend_calls = gateway->backend_calls() - before;
        for (const auto& record : result.records) {
            for (const auto& entry : record.trace) {
                if (!entry.cache_hit) ++row.stage_calls[entry.stage];
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_table(SweepAxis axis, const std::vector<SweepRow>& rows)
{
    std::string out = fmt::format("{:>6}  {:>10}  {:>8}  {:>8}  {:>8}  {:>8}  {:>7}  {:>6}\n", to_string(axis),
                                  "fact_acc", "n_fact", "ans_rec", "acc", "|Z|", "calls", "done");
    for (const auto& row : rows) {
        const auto& r = row.report;
        out += fmt::format("{:>6}  {:>10}  {:>8.2f}  {:>8}  {:>8}  {:>8}  {:>7}  {:>6}\n", row.value,
                           cell(r.fact_acc), r.n_fact, cell(r.ans_rec), cell(r.acc), cell(r.selected_facts),
                           row.backend_calls, fmt::format("{}/{}", r.completed, r.completed + r.failed));
    }
    return out;
}

Json sweep_to_json(SweepAxis axis, const std::vector<SweepRow>& rows)
{
    Json items = Json::array();
    for (const auto& row : rows) {
        Json report = report_to_json(row.report);
        report.erase("examples");
        items.push_back({{"value", row.value},
                         {"report", std::move(report)},
                         {"backend_calls", row.backend_calls},
                         {"stage_calls", row.stage_calls}});
    }
    return Json{{"axis", to_string(axis)}, {"rows", std::move(items)}};
}

}  // namespace selfendorse
