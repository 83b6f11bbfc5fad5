// Evaluation mathematics: lexical overlap (BLEU, ROUGE), diversity, the
// IDF-weighted coverage metrics, and the embedding-based attribution metrics
// (persona lift, attribution accuracy, margin). Everything here is pure.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "afa/text_embedder.hpp"

namespace afa {

// Lowercase, punctuation stripped to spaces, split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

// idf(w) = ln((N + 1) / (df(w) + 1)) + 1; unseen tokens take df = 0.
class IdfTable {
 public:
  IdfTable() = default;

  static IdfTable build(const std::vector<std::string>& documents);

  double weight(const std::string& token) const;
  std::size_t doc_count() const { return doc_count_; }

 private:
  std::size_t doc_count_ = 0;
  std::map<std::string, std::size_t> doc_freq_;
};

// Cumulative BLEU-n with brevity penalty exp(min(0, 1 - |ref|/|cand|)) and
// add-one smoothing of the i-gram precisions for i >= 2 only.
double bleu_n(const std::string& candidate, const std::string& reference, int n);

enum class RougeVariant { Rouge1, Rouge2, RougeL };

// F1 of n-gram overlap (variants 1, 2) or longest common subsequence (L).
double rouge(const std::string& candidate, const std::string& reference,
             RougeVariant variant);

// Unique unigrams over total unigrams across the concatenated responses.
double distinct_1(const std::vector<std::string>& responses);

// IDF-weighted unique-token overlap of y against attribute text a, normalized
// by a's total IDF mass. Throws UndefinedCoverage when a has no tokens.
double idf_o(const std::string& y, const std::string& a, const IdfTable& idf);

// max over attributes of idf_o. Throws UndefinedCoverage on an empty persona.
double a_cover(const std::string& y, const std::vector<std::string>& persona_attrs,
               const IdfTable& idf);

// idf_o of the concatenated responses against the whole persona text.
double p_cover(const std::vector<std::string>& responses,
               const std::string& persona_text, const IdfTable& idf);

// max over attributes of cosine(embed(y), embed(attr)).
double semantic_a_cover(const std::string& y,
                        const std::vector<std::string>& persona_attrs,
                        TextEmbedder& embedder);

// lift(y, p) = sim(y, p) - sim(y_gt, p); ground-truth subtraction controls for
// topic bias in the question.
double persona_lift(const std::string& y, const std::string& y_gt,
                    const std::string& persona_text, TextEmbedder& embedder);

struct AttributionRecord {
  std::string response;
  std::string ground_truth;
  std::string persona_correct;
  std::string persona_wrong;
  double lift_correct = 0.0;
  double lift_wrong = 0.0;
};

// Fraction of records with lift_correct strictly greater than lift_wrong;
// ties count as incorrect. Throws UndefinedMetric on empty input.
double paa(const std::vector<AttributionRecord>& records);

// Mean signed difference lift_correct - lift_wrong.
double persona_margin(const std::vector<AttributionRecord>& records);

}  // namespace afa
