#include "selfendorse/dataset.hpp"

#include "selfendorse/baselines.hpp"
#include "selfendorse/errors.hpp"
#include "selfendorse/kmeans.hpp"
#include "selfendorse/serialize.hpp"
#include "selfendorse/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace selfendorse {

namespace {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open dataset " + path.string(), 0);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string padded(std::size_t n)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04zu", n);
    return buf;
}

std::vector<std::string> aliases_of(const Json& item)
{
    for (const char* key : {"answers", "aliases"}) {
        if (item.contains(key)) return item.at(key).get<std::vector<std::string>>();
    }
    for (const char* key : {"answer", "Answer"}) {
        if (!item.contains(key)) continue;
        const auto& answer = item.at(key);
        if (answer.is_string()) return {answer.get<std::string>()};
        for (const char* inner : {"aliases", "Aliases"}) {
            if (answer.contains(inner)) return answer.at(inner).get<std::vector<std::string>>();
        }
        if (answer.contains("Value")) return {answer.at("Value").get<std::string>()};
    }
    throw Error("no answer aliases");
}

std::string question_of(const Json& item)
{
    for (const char* key : {"question", "Question"}) {
        if (item.contains(key)) return item.at(key).get<std::string>();
    }
    throw Error("no question");
}

std::string id_of(const Json& item, const std::string& fallback)
{
    for (const char* key : {"id", "question_id", "QuestionId"}) {
        if (item.contains(key)) {
            const auto& v = item.at(key);
            return v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    return fallback;
}

Example qa_example(const Json& item, std::size_t ordinal)
{
    Example ex;
    ex.id = sanitize_id(id_of(item, "tqa-" + padded(ordinal)));
    ex.answer_aliases = aliases_of(item);
    if (ex.answer_aliases.empty()) throw Error("empty alias list");
    ex.query = {ex.id, question_of(item), TaskKind::short_qa};
    return ex;
}

Example math_example(const Json& item, std::size_t ordinal)
{
    Example ex;
    ex.id = sanitize_id(id_of(item, "gsm-" + padded(ordinal)));
    const auto answer = item.at("answer").get<std::string>();
    const auto marker = answer.rfind("####");
    if (marker == std::string::npos) throw Error("answer has no '####' delimiter");
    ex.numeric_answer = normalize_number(trim(answer.substr(marker + 4)));
    if (ex.numeric_answer.empty()) throw Error("no number after '####'");
    ex.query = {ex.id, question_of(item), TaskKind::math};
    return ex;
}

std::size_t line_of_offset(const std::string& text, std::size_t offset)
{
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

}  // namespace

std::string bio_query(const std::string& entity)
{
    return "Tell me a bio of " + entity;
}

std::string sanitize_id(std::string_view id)
{
    std::string out;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
    return out;
}

std::vector<Example> load_dataset(const std::filesystem::path& path, TaskKind kind)
{
    const auto text = read_file(path);
    std::vector<Example> examples;

    if (kind == TaskKind::short_qa && text.find_first_not_of(" \t\r\n") != std::string::npos &&
        text[text.find_first_not_of(" \t\r\n")] == '[') {
        Json items;
        try {
            items = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ParseError(e.what(), line_of_offset(text, e.byte));
        }
        for (std::size_t i = 0; i < items.size(); ++i) {
            try {
                examples.push_back(qa_example(items[i], i));
            } catch (const std::exception& e) {
                throw ParseError(std::string("item ") + std::to_string(i) + ": " + e.what(), 0);
            }
        }
        return examples;
    }

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto content = trim(line);
        if (content.empty()) continue;
        const auto ordinal = examples.size();
        try {
            if (kind == TaskKind::longform) {
                Example ex;
                ex.id = "bio-" + padded(ordinal);
                ex.entity = content;
                ex.query = {ex.id, bio_query(content), TaskKind::longform};
                examples.push_back(std::move(ex));
            } else {
                const auto item = Json::parse(content);
                if (!item.is_object()) throw Error("expected a JSON object");
                examples.push_back(kind == TaskKind::math ? math_example(item, ordinal) : qa_example(item, ordinal));
            }
        } catch (const std::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return examples;
}

std::vector<Example> sample_examples(const std::vector<Example>& examples, std::size_t count, std::uint64_t seed)
{
    if (count >= examples.size()) {
        return examples;
    }
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::uint64_t state = seed;
    for (std::size_t i = 0; i < count; ++i) {
        const auto span = order.size() - i;
        const auto j = i + static_cast<std::size_t>(splitmix64(state) % span);
        std::swap(order[i], order[j]);
    }
    order.resize(count);
    std::sort(order.begin(), order.end());
    std::vector<Example> out;
    out.reserve(count);
    for (auto idx : order) out.push_back(examples[idx]);
    return out;
}

}  // namespace selfendorse
