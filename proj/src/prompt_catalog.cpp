#include "selfendorse/prompt_catalog.hpp"

#include "selfendorse/errors.hpp"

#include <fstream>
#include <sstream>

namespace selfendorse {

namespace {

constexpr std::string_view kDefaultCatalog = R"PROMPTS(Default prompt catalog. Each [[name]] line starts a template; {name} is a placeholder.
[[decompose]]
List all non-repeated facts from the text below in numerical order. Each fact should be a self-contained sentence: {response}
[[verify]]
Take the following as truth: {context}
Then the following statement: "{fact}" is true, false, or inconclusive?
[[regenerate]]
Knowledge from other sources:
{facts}
Given the materials above, answer the question: {query}
[[math_sample]]
{query}
Let's think step by step. Finish with a final line of the form "Answer: <number>".
[[usc_choose]]
I have generated the following responses to the question: {query}

{responses}

Evaluate these responses. Select the most consistent response based on majority consensus. Start your answer with "The most consistent response is Response X" (without quotes).
[[cove_plan]]
Question: {query}
Draft answer: {draft}

Write a numbered list of verification questions that fact-check the claims in the draft answer. Each question must be answerable on its own.
[[cove_answer]]
Answer the following question concisely and factually.
Question: {question}
[[cove_final]]
Question: {query}

Draft answer:
{draft}

Verification questions and independently obtained answers:
{verifications}

Using the verification results, correct any mistakes in the draft and write the final verified answer to the question.
[[refine]]
Question: {query}

Here is a previous answer to the question:
{draft}

Review the previous answer and correct any factual errors. Write the corrected, complete answer to the question.
[[fact_judge]]
Evidence about {topic}:
{evidence}

Is the following statement supported by the evidence? Answer True or False.
Statement: {fact}
[[rationale_grade]]
Please act as an impartial judge and evaluate whether every step of the assistant's reasoning for the math question below is correct. Compare it with the reference answer. Reply with "Yes" if all steps are correct and "No" otherwise.

[Question]
{query}

[Reference Answer]
{reference}

[Assistant's Answer]
{response}
)PROMPTS";

bool header_name(std::string_view line, std::string& name)
{
    if (line.size() > 4 && line.starts_with("[[") && line.ends_with("]]")) {
        name = std::string(line.substr(2, line.size() - 4));
        return true;
    }
    return false;
}

}  // namespace

std::string_view default_catalog_text()
{
    return kDefaultCatalog;
}

PromptCatalog::PromptCatalog() : PromptCatalog(parse(kDefaultCatalog)) {}

PromptCatalog PromptCatalog::parse(std::string_view text)
{
    PromptCatalog catalog{Empty{}};
    std::string current;
    std::string body;
    bool in_template = false;
    auto flush = [&] {
        if (in_template) {
            if (!body.empty() && body.back() == '\n') body.pop_back();
            catalog.templates_.insert_or_assign(current, body);
        }
    };
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::string name;
        if (header_name(line, name)) {
            flush();
            current = std::move(name);
            body.clear();
            in_template = true;
        } else if (in_template && !(end == text.size() && line.empty())) {
            body.append(line);
            body.push_back('\n');
        }
        pos = end + 1;
    }
    flush();
    return catalog;
}

PromptCatalog PromptCatalog::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open prompt catalog " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

void PromptCatalog::merge(const PromptCatalog& other)
{
    for (const auto& [name, body] : other.templates_) {
        templates_.insert_or_assign(name, body);
    }
}

bool PromptCatalog::contains(std::string_view name) const
{
    return templates_.find(name) != templates_.end();
}

const std::string& PromptCatalog::raw(std::string_view name) const
{
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw ConfigError("unknown prompt template: " + std::string(name));
    }
    return it->second;
}

std::vector<std::string> PromptCatalog::names() const
{
    std::vector<std::string> out;
    for (const auto& entry : templates_) out.push_back(entry.first);
    return out;
}

std::string PromptCatalog::render(std::string_view name, const std::map<std::string, std::string>& values) const
{
    const auto& tmpl = raw(name);
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        const char c = tmpl[i];
        if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
            out.push_back('{');
            ++i;
        } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
            out.push_back('}');
            ++i;
        } else if (c == '{') {
            const auto close = tmpl.find('}', i);
            if (close == std::string::npos) {
                throw ConfigError("unterminated placeholder in template " + std::string(name));
            }
            const auto key = tmpl.substr(i + 1, close - i - 1);
            auto it = values.find(key);
            if (it == values.end()) {
                throw ConfigError("template " + std::string(name) + " needs a value for {" + key + "}");
            }
            out += it->second;
            i = close;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string PromptCatalog::dump() const
{
    std::string out;
    for (const auto& [name, body] : templates_) {
        out += "[[" + name + "]]\n" + body + "\n";
    }
    return out;
}

}  // namespace selfendorse
