#pragma once

#include "selfendorse/types.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace selfendorse {

/// Okapi BM25 over a small ad-hoc corpus where every document is one fact.
///
/// Corpus statistics (document frequency, average document length) come from
/// this corpus only. For query q and document d:
///
///   score(d, q) = sum_{t in q} idf(t) * tf(t,d) * (k1 + 1) / (tf(t,d) + k1 * (1 - b + b * |d| / avgdl))
///   idf(t)      = ln((n - df(t) + 0.5) / (df(t) + 0.5) + 1)
///
/// Repeated query tokens contribute once per occurrence.
class Bm25Index {
public:
    Bm25Index(std::vector<std::vector<std::string>> documents, Bm25Params params);

    double score(std::span<const std::string> query, std::size_t document) const;
    std::vector<double> scores(std::span<const std::string> query) const;

    std::size_t size() const noexcept { return documents_.size(); }

private:
    double idf(const std::string& term) const;

    std::vector<std::vector<std::string>> documents_;
    std::vector<std::map<std::string, int>> term_freqs_;
    std::map<std::string, int> doc_freqs_;
    double avgdl_ = 0.0;
    Bm25Params params_;
};

/// One score per corpus fact, aligned with `corpus`. Throws EmptyCorpus.
std::vector<double> bm25_scores(const Fact& query_fact, std::span<const Fact> corpus, const Bm25Params& params = {});

}  // namespace selfendorse
