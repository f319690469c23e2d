#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace aag::kb {

using TokenList = std::vector<std::string>;

/// Scores every document of a small corpus against a query. Implementations
/// must be deterministic; the corpus is the full candidate set of one phase.
class LexicalScorer {
 public:
  virtual ~LexicalScorer() = default;
  virtual std::vector<double> score(const std::vector<TokenList>& docs, const TokenList& query) const = 0;
};

/// Okapi BM25 with the non-negative idf variant ln(1 + (N - df + 0.5) / (df + 0.5)),
/// which keeps scores positive on tiny corpora where a term appears in most
/// documents. Query terms are de-duplicated.
class Bm25Scorer final : public LexicalScorer {
 public:
  explicit Bm25Scorer(double k1 = 1.2, double b = 0.75) : k1_(k1), b_(b) {}

  std::vector<double> score(const std::vector<TokenList>& docs, const TokenList& query) const override {
    std::vector<double> out(docs.size(), 0.0);
    if (docs.empty()) return out;

    double total_len = 0;
    for (const auto& d : docs) total_len += static_cast<double>(d.size());
    const double avgdl = total_len / static_cast<double>(docs.size());
    const double n_docs = static_cast<double>(docs.size());

    std::vector<std::string> terms;
    std::unordered_set<std::string> seen;
    for (const auto& t : query)
      if (seen.insert(t).second) terms.push_back(t);

    std::vector<std::unordered_map<std::string, int>> tf(docs.size());
    std::unordered_map<std::string, int> df;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      for (const auto& t : docs[i]) ++tf[i][t];
      for (const auto& [t, _] : tf[i]) ++df[t];
    }

    for (const auto& term : terms) {
      auto it = df.find(term);
      if (it == df.end()) continue;
      const double dfv = it->second;
      const double idf = std::log(1.0 + (n_docs - dfv + 0.5) / (dfv + 0.5));
      for (std::size_t i = 0; i < docs.size(); ++i) {
        auto f = tf[i].find(term);
        if (f == tf[i].end()) continue;
        const double freq = f->second;
        const double len = static_cast<double>(docs[i].size());
        const double norm = avgdl > 0 ? len / avgdl : 0.0;
        out[i] += idf * freq * (k1_ + 1.0) / (freq + k1_ * (1.0 - b_ + b_ * norm));
      }
    }
    return out;
  }

 private:
  double k1_;
  double b_;
};

}  // namespace aag::kb
