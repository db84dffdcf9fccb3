#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace selfendorse {

/// Named prompt templates with `{placeholder}` substitution.
///
/// File format: a header line `[[name]]` starts a template. The template body
/// is every following line up to the next header, with the final newline
/// removed. Lines before the first header are ignored (use them for notes).
/// In bodies, `{{` and `}}` produce literal braces.
class PromptCatalog {
public:
    /// The shipped defaults.
    PromptCatalog();

    static PromptCatalog parse(std::string_view text);
    static PromptCatalog from_file(const std::filesystem::path& path);

    /// Overrides or adds templates from another catalog.
    void merge(const PromptCatalog& other);

    bool contains(std::string_view name) const;
    const std::string& raw(std::string_view name) const;
    std::vector<std::string> names() const;

    /// Substitutes every placeholder. Throws ConfigError for an unknown
    /// template or a placeholder missing from `values`.
    std::string render(std::string_view name, const std::map<std::string, std::string>& values) const;

    /// Serializes in the file format; parse(dump()) reproduces the catalog.
    std::string dump() const;

private:
    struct Empty {};
    explicit PromptCatalog(Empty) {}

    std::map<std::string, std::string, std::less<>> templates_;
};

/// Text of the shipped default catalog.
std::string_view default_catalog_text();

// Template names used by the pipeline and baselines.
namespace prompt_names {
inline constexpr std::string_view decompose = "decompose";
inline constexpr std::string_view verify = "verify";
inline constexpr std::string_view regenerate = "regenerate";
inline constexpr std::string_view math_sample = "math_sample";
inline constexpr std::string_view usc_choose = "usc_choose";
inline constexpr std::string_view cove_plan = "cove_plan";
inline constexpr std::string_view cove_answer = "cove_answer";
inline constexpr std::string_view cove_final = "cove_final";
inline constexpr std::string_view refine = "refine";
inline constexpr std::string_view fact_judge = "fact_judge";
inline constexpr std::string_view rationale_grade = "rationale_grade";
}  // namespace prompt_names

}  // namespace selfendorse
