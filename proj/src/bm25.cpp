#include "selfendorse/bm25.hpp"

#include "selfendorse/errors.hpp"
#include "selfendorse/text.hpp"

#include <cmath>

namespace selfendorse {

Bm25Index::Bm25Index(std::vector<std::vector<std::string>> documents, Bm25Params params)
    : documents_(std::move(documents)), params_(params)
{
    if (documents_.empty()) {
        throw EmptyCorpus("BM25 corpus is empty");
    }
    std::size_t total = 0;
    term_freqs_.reserve(documents_.size());
    for (const auto& doc : documents_) {
        total += doc.size();
        auto& freqs = term_freqs_.emplace_back();
        for (const auto& term : doc) {
            ++freqs[term];
        }
        for (const auto& entry : freqs) {
            ++doc_freqs_[entry.first];
        }
    }
    avgdl_ = static_cast<double>(total) / static_cast<double>(documents_.size());
}

double Bm25Index::idf(const std::string& term) const
{
    const auto it = doc_freqs_.find(term);
    const double df = it == doc_freqs_.end() ? 0.0 : it->second;
    const double n = static_cast<double>(documents_.size());
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Bm25Index::score(std::span<const std::string> query, std::size_t document) const
{
    const auto& freqs = term_freqs_.at(document);
    // All-empty corpus: every |d| is 0 and no term can match.
    const double norm_len = avgdl_ > 0.0 ? static_cast<double>(documents_[document].size()) / avgdl_ : 0.0;
    const double denom_len = params_.k1 * (1.0 - params_.b + params_.b * norm_len);
    double total = 0.0;
    for (const auto& term : query) {
        const auto it = freqs.find(term);
        if (it == freqs.end()) continue;
        const double tf = it->second;
        total += idf(term) * tf * (params_.k1 + 1.0) / (tf + denom_len);
    }
    return total;
}

std::vector<double> Bm25Index::scores(std::span<const std::string> query) const
{
    std::vector<double> out;
    out.reserve(documents_.size());
    for (std::size_t d = 0; d < documents_.size(); ++d) {
        out.push_back(score(query, d));
    }
    return out;
}

std::vector<double> bm25_scores(const Fact& query_fact, std::span<const Fact> corpus, const Bm25Params& params)
{
    if (corpus.empty()) {
        throw EmptyCorpus("BM25 corpus is empty");
    }
    std::vector<std::vector<std::string>> docs;
    docs.reserve(corpus.size());
    for (const auto& fact : corpus) {
        docs.push_back(tokenize(fact.text));
    }
    const auto query = tokenize(query_fact.text);
    return Bm25Index(std::move(docs), params).scores(query);
}

}  // namespace selfendorse
