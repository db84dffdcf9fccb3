#include "selfendorse/metrics.hpp"

#include "selfendorse/baselines.hpp"
#include "selfendorse/errors.hpp"
#include "selfendorse/serialize.hpp"
#include "selfendorse/text.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

namespace selfendorse {

bool answer_recall(std::string_view response, const std::vector<std::string>& gold_aliases)
{
    if (gold_aliases.empty()) {
        throw PreconditionError("answer_recall needs at least one alias");
    }
    for (const auto& alias : gold_aliases) {
        if (contains_normalized(response, alias)) return true;
    }
    return false;
}

bool numeric_match(std::string_view extracted, std::string_view gold)
{
    const auto a = normalize_number(extracted);
    return !a.empty() && a == normalize_number(gold);
}

double exact_match_accuracy(const std::vector<std::string>& responses, const std::vector<std::string>& golds)
{
    if (responses.size() != golds.size()) {
        throw PreconditionError("responses and golds differ in length");
    }
    if (responses.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        const auto answer = extract_final_answer(responses[i], TaskKind::math);
        if (answer && numeric_match(*answer, golds[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(responses.size());
}

int fact_count(std::string_view response, const Decomposer& decomposer)
{
    if (trim(response).empty()) return 0;
    return static_cast<int>(decomposer(Candidate{0, std::string(response), {}}).size());
}

// ---- judges -----------------------------------------------------------------

namespace {

std::string judge_form(std::string_view text)
{
    auto out = to_lower_ascii(normalize_whitespace(text));
    while (!out.empty() && (out.back() == '.' || out.back() == ' ')) out.pop_back();
    return out;
}

}  // namespace

OracleJudge::OracleJudge(Bank bank, bool allow_substring) : bank_(std::move(bank)), allow_substring_(allow_substring)
{
    for (auto& [id, facts] : bank_) {
        for (auto& fact : facts) fact = judge_form(fact);
    }
}

OracleJudge OracleJudge::from_file(const std::filesystem::path& path, bool allow_substring)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open fact bank " + path.string(), 0);
    }
    Bank bank;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = Json::parse(line);
            auto& facts = bank[j.at("id").get<std::string>()];
            for (const auto& f : j.at("facts")) facts.push_back(f.get<std::string>());
        } catch (const Json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return OracleJudge(std::move(bank), allow_substring);
}

bool OracleJudge::supported(const Fact& fact, const Example& example)
{
    const auto it = bank_.find(example.id);
    if (it == bank_.end()) {
        throw JudgeUnavailable("no reference facts for example " + example.id);
    }
    const auto text = judge_form(fact.text);
    if (text.empty()) return false;
    for (const auto& ref : it->second) {
        if (ref == text) return true;
        if (allow_substring_ && !ref.empty() &&
            (ref.find(text) != std::string::npos || text.find(ref) != std::string::npos)) {
            return true;
        }
    }
    return false;
}

BackendJudge::BackendJudge(Gateway& gateway, OracleJudge::Bank evidence, PromptCatalog prompts)
    : gateway_(gateway), evidence_(std::move(evidence)), prompts_(std::move(prompts))
{}

bool BackendJudge::supported(const Fact& fact, const Example& example)
{
    const auto it = evidence_.find(example.id);
    if (it == evidence_.end()) {
        throw JudgeUnavailable("no evidence for example " + example.id);
    }
    std::string evidence;
    for (const auto& passage : it->second) {
        if (!evidence.empty()) evidence.push_back('\n');
        evidence += passage;
    }
    const auto topic = example.entity.empty() ? example.query.text : example.entity;
    CallTrace trace;
    try {
        const auto reply = gateway_.complete(
            make_request(prompts_.render(prompt_names::fact_judge,
                                         {{"topic", topic}, {"evidence", evidence}, {"fact", fact.text}})),
            "judge", trace);
        const auto lowered = to_lower_ascii(reply.text);
        const auto t = lowered.find("true");
        const auto f = lowered.find("false");
        return t != std::string::npos && (f == std::string::npos || t < f);
    } catch (const Error& e) {
        throw JudgeUnavailable(std::string("judge backend failed: ") + e.what());
    }
}

JudgeResult judge_facts(const std::vector<Fact>& facts, const Example& example, FactJudge& judge)
{
    JudgeResult result;
    std::size_t supported = 0;
    for (const auto& fact : facts) {
        const bool ok = judge.supported(fact, example);
        supported += ok ? 1 : 0;
        result.verdicts.push_back({fact.candidate_index, fact.fact_index, fact.text, ok, judge.name()});
    }
    if (!facts.empty()) {
        result.support_rate = static_cast<double>(supported) / static_cast<double>(facts.size());
    }
    return result;
}

// ---- reports ----------------------------------------------------------------

namespace {

struct Mean {
    double sum = 0.0;
    std::size_t count = 0;

    void add(const std::optional<double>& v)
    {
        if (v) {
            sum += *v;
            ++count;
        }
    }
    std::optional<double> value() const
    {
        return count == 0 ? std::nullopt : std::optional<double>(sum / static_cast<double>(count));
    }
};

Json optional_json(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

std::string cell(const std::optional<double>& v)
{
    return v ? fmt::format("{:.4f}", *v) : std::string("-");
}

}  // namespace

MetricsReport aggregate(std::vector<ExampleMetrics> examples)
{
    MetricsReport report;
    Mean fact_acc, n_fact, ans_rec, acc, selected;
    for (const auto& ex : examples) {
        if (ex.status != "complete") {
            ++report.failed;
            continue;
        }
        ++report.completed;
        fact_acc.add(ex.fact_acc);
        n_fact.add(ex.n_fact);
        ans_rec.add(ex.ans_rec);
        acc.add(ex.acc);
        selected.add(ex.selected_facts);
    }
    report.fact_acc = fact_acc.value();
    report.n_fact = n_fact.value().value_or(0.0);
    report.ans_rec = ans_rec.value();
    report.acc = acc.value();
    report.selected_facts = selected.value();
    report.examples = std::move(examples);
    return report;
}

ExampleMetrics example_metrics(const RunRecord& record, const Example& example, FactJudge* judge)
{
    ExampleMetrics m;
    m.id = example.id;
    m.status = record.status;
    if (record.status != "complete") {
        return m;
    }
    const auto kind = example.query.task_kind;

    // Responses scored for this example, with their facts.
    std::vector<std::pair<const std::string*, const std::vector<Fact>*>> responses;
    if (record.method == "base") {
        for (const auto& c : record.candidates) responses.emplace_back(&c.text, &c.facts);
    } else {
        responses.emplace_back(&record.final_response, &record.final_facts);
    }

    Mean fact_acc, n_fact, ans_rec, acc;
    for (const auto& [text, facts] : responses) {
        n_fact.add(static_cast<double>(facts->size()));
        if (judge) fact_acc.add(judge_facts(*facts, example, *judge).support_rate);
        if (kind == TaskKind::short_qa && !example.answer_aliases.empty()) {
            ans_rec.add(answer_recall(*text, example.answer_aliases) ? 1.0 : 0.0);
        }
        if (kind == TaskKind::math) {
            const auto answer = extract_final_answer(*text, kind);
            acc.add(answer && numeric_match(*answer, example.numeric_answer) ? 1.0 : 0.0);
        }
    }
    m.fact_acc = fact_acc.value();
    m.n_fact = n_fact.value().value_or(0.0);
    m.ans_rec = ans_rec.value();
    m.acc = acc.value();
    if (record.selected_facts) {
        m.selected_facts = static_cast<double>(record.selected_facts->facts.size());
    }
    return m;
}

Json report_to_json(const MetricsReport& report)
{
    Json examples = Json::array();
    for (const auto& ex : report.examples) {
        examples.push_back({{"id", ex.id},
                            {"status", ex.status},
                            {"fact_acc", optional_json(ex.fact_acc)},
                            {"n_fact", ex.n_fact},
                            {"ans_rec", optional_json(ex.ans_rec)},
                            {"acc", optional_json(ex.acc)},
                            {"selected_facts", optional_json(ex.selected_facts)}});
    }
    return Json{{"fact_acc", optional_json(report.fact_acc)},
                {"n_fact", report.n_fact},
                {"ans_rec", optional_json(report.ans_rec)},
                {"acc", optional_json(report.acc)},
                {"selected_facts", optional_json(report.selected_facts)},
                {"completed", report.completed},
                {"failed", report.failed},
                {"examples", std::move(examples)}};
}

std::string report_to_table(const MetricsReport& report)
{
    std::size_t id_width = 7;
    for (const auto& ex : report.examples) id_width = std::max(id_width, ex.id.size());
    std::string out = fmt::format("{:<{}}  {:>9}  {:>10}  {:>8}  {:>8}  {:>8}  {:>8}\n", "example", id_width, "status",
                                  "fact_acc", "n_fact", "ans_rec", "acc", "|Z|");
    for (const auto& ex : report.examples) {
        out += fmt::format("{:<{}}  {:>9}  {:>10}  {:>8.2f}  {:>8}  {:>8}  {:>8}\n", ex.id, id_width, ex.status,
                           cell(ex.fact_acc), ex.n_fact, cell(ex.ans_rec), cell(ex.acc), cell(ex.selected_facts));
    }
    out += fmt::format("{:<{}}  {:>9}  {:>10}  {:>8.2f}  {:>8}  {:>8}  {:>8}\n", "MEAN", id_width,
                       fmt::format("{}/{}", report.completed, report.completed + report.failed), cell(report.fact_acc),
                       report.n_fact, cell(report.ans_rec), cell(report.acc), cell(report.selected_facts));
    return out;
}

// ---- correlation ------------------------------------------------------------

CorrelationReport correlation_report(const std::vector<std::pair<double, bool>>& facts_with_truth)
{
    if (facts_with_truth.size() < 2) {
        throw DegenerateInput("correlation needs at least two points");
    }
    const double first = facts_with_truth.front().first;
    const bool distinct = std::any_of(facts_with_truth.begin(), facts_with_truth.end(),
                                      [first](const auto& p) { return p.first != first; });
    if (!distinct) {
        throw DegenerateInput("all endorsement scores are equal");
    }
    CorrelationReport report;
    report.points = facts_with_truth.size();
    const double n = static_cast<double>(facts_with_truth.size());
    double mean_s = 0.0, mean_t = 0.0;
    for (const auto& [s, t] : facts_with_truth) {
        mean_s += s;
        mean_t += t ? 1.0 : 0.0;
    }
    mean_s /= n;
    mean_t /= n;
    double cov = 0.0, var_s = 0.0, var_t = 0.0;
    std::array<double, 10> truth_sum{};
    for (const auto& [s, t] : facts_with_truth) {
        const double ds = s - mean_s;
        const double dt = (t ? 1.0 : 0.0) - mean_t;
        cov += ds * dt;
        var_s += ds * ds;
        var_t += dt * dt;
        const auto bin = static_cast<std::size_t>(std::clamp(static_cast<int>(std::floor(s * 10.0)), 0, 9));
        ++report.bin_counts[bin];
        truth_sum[bin] += t ? 1.0 : 0.0;
    }
    if (var_t > 0.0) {
        report.pearson = cov / std::sqrt(var_s * var_t);
    }
    for (std::size_t b = 0; b < 10; ++b) {
        if (report.bin_counts[b] > 0) {
            report.bin_factuality[b] = truth_sum[b] / static_cast<double>(report.bin_counts[b]);
        }
    }
    return report;
}

int decile_inversions(const CorrelationReport& report)
{
    int inversions = 0;
    std::optional<double> previous;
    for (const auto& value : report.bin_factuality) {
        if (!value) continue;
        if (previous && *value < *previous) ++inversions;
        previous = value;
    }
    return inversions;
}

}  // namespace selfendorse
