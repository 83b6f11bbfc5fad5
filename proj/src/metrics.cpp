#include "afa/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "afa/error.hpp"

namespace afa {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      tokens.push_back(token);
      token.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      token += static_cast<char>(std::tolower(c));
    } else if (c >= 0x80) {
      token += static_cast<char>(c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

IdfTable IdfTable::build(const std::vector<std::string>& documents) {
  IdfTable table;
  table.doc_count_ = documents.size();
  for (const auto& doc : documents) {
    auto tokens = tokenize(doc);
    std::set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& token : unique) ++table.doc_freq_[token];
  }
  return table;
}

double IdfTable::weight(const std::string& token) const {
  std::size_t df = 0;
  if (auto it = doc_freq_.find(token); it != doc_freq_.end()) df = it->second;
  return std::log(static_cast<double>(doc_count_ + 1) / static_cast<double>(df + 1)) +
         1.0;
}

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                          std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                 tokens.begin() + static_cast<std::ptrdiff_t>(i + n))]++;
  }
  return counts;
}

std::size_t clipped_matches(const std::map<Ngram, std::size_t>& cand,
                            const std::map<Ngram, std::size_t>& ref) {
  std::size_t matches = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) matches += std::min(count, it->second);
  }
  return matches;
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        curr[j] = prev[j - 1] + 1;
      } else {
        curr[j] = std::max(prev[j], curr[j - 1]);
      }
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

double f1(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double bleu_n(const std::string& candidate, const std::string& reference, int n) {
  if (n < 1 || n > 4) raise(ErrorCode::InvalidArgument, "bleu_n: n must be in 1..4");
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty()) return 0.0;
  if (ref.empty()) return 0.0;

  double log_sum = 0.0;
  for (int i = 1; i <= n; ++i) {
    const auto cand_grams = ngram_counts(cand, static_cast<std::size_t>(i));
    const auto ref_grams = ngram_counts(ref, static_cast<std::size_t>(i));
    std::size_t total = 0;
    for (const auto& [gram, count] : cand_grams) total += count;
    std::size_t matches = clipped_matches(cand_grams, ref_grams);
    double precision;
    if (i == 1) {
      if (total == 0) return 0.0;
      precision = static_cast<double>(matches) / static_cast<double>(total);
    } else {
      // Add-one smoothing for the higher orders only keeps BLEU-1 exact.
      precision = (static_cast<double>(matches) + 1.0) /
                  (static_cast<double>(total) + 1.0);
    }
    if (precision == 0.0) return 0.0;
    log_sum += std::log(precision);
  }
  const double geo_mean = std::exp(log_sum / n);
  const double brevity = std::exp(
      std::min(0.0, 1.0 - static_cast<double>(ref.size()) /
                              static_cast<double>(cand.size())));
  return geo_mean * brevity;
}

double rouge(const std::string& candidate, const std::string& reference,
             RougeVariant variant) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() && ref.empty()) return 0.0;
  if (cand.empty() || ref.empty()) return 0.0;

  if (variant == RougeVariant::RougeL) {
    const double lcs = static_cast<double>(lcs_length(cand, ref));
    return f1(lcs / static_cast<double>(cand.size()),
              lcs / static_cast<double>(ref.size()));
  }
  const std::size_t n = variant == RougeVariant::Rouge1 ? 1 : 2;
  const auto cand_grams = ngram_counts(cand, n);
  const auto ref_grams = ngram_counts(ref, n);
  std::size_t cand_total = 0, ref_total = 0;
  for (const auto& [gram, count] : cand_grams) cand_total += count;
  for (const auto& [gram, count] : ref_grams) ref_total += count;
  if (cand_total == 0 || ref_total == 0) return 0.0;
  const double matches = static_cast<double>(clipped_matches(cand_grams, ref_grams));
  return f1(matches / static_cast<double>(cand_total),
            matches / static_cast<double>(ref_total));
}

double distinct_1(const std::vector<std::string>& responses) {
  std::set<std::string> unique;
  std::size_t total = 0;
  for (const auto& response : responses) {
    for (auto& token : tokenize(response)) {
      unique.insert(std::move(token));
      ++total;
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double idf_o(const std::string& y, const std::string& a, const IdfTable& idf) {
  const auto attr_tokens = tokenize(a);
  if (attr_tokens.empty()) {
    raise(ErrorCode::UndefinedCoverage, "idf_o: attribute has no tokens");
  }
  const auto y_tokens_vec = tokenize(y);
  const std::set<std::string> y_tokens(y_tokens_vec.begin(), y_tokens_vec.end());
  const std::set<std::string> attrs(attr_tokens.begin(), attr_tokens.end());
  double covered = 0.0, mass = 0.0;
  for (const auto& token : attrs) {
    const double w = idf.weight(token);
    mass += w;
    if (y_tokens.count(token)) covered += w;
  }
  return covered / mass;
}

double a_cover(const std::string& y, const std::vector<std::string>& persona_attrs,
               const IdfTable& idf) {
  if (persona_attrs.empty()) {
    raise(ErrorCode::UndefinedCoverage, "a_cover: empty persona");
  }
  double best = 0.0;
  for (const auto& attr : persona_attrs) {
    best = std::max(best, idf_o(y, attr, idf));
  }
  return best;
}

double p_cover(const std::vector<std::string>& responses,
               const std::string& persona_text, const IdfTable& idf) {
  if (responses.empty()) {
    raise(ErrorCode::UndefinedCoverage, "p_cover: no responses");
  }
  std::string joined;
  for (const auto& response : responses) {
    if (!joined.empty()) joined += ' ';
    joined += response;
  }
  return idf_o(joined, persona_text, idf);
}

double semantic_a_cover(const std::string& y,
                        const std::vector<std::string>& persona_attrs,
                        TextEmbedder& embedder) {
  if (persona_attrs.empty()) {
    raise(ErrorCode::UndefinedCoverage, "semantic_a_cover: empty persona");
  }
  const EmbeddingVector y_emb = embedder.embed(y);
  double best = -1.0;
  for (const auto& attr : persona_attrs) {
    best = std::max(best, cosine_similarity(y_emb, embedder.embed(attr)));
  }
  return best;
}

double persona_lift(const std::string& y, const std::string& y_gt,
                    const std::string& persona_text, TextEmbedder& embedder) {
  if (y.empty() || y_gt.empty() || persona_text.empty()) {
    raise(ErrorCode::InvalidArgument, "persona_lift: empty text");
  }
  const EmbeddingVector p = embedder.embed(persona_text);
  return cosine_similarity(embedder.embed(y), p) -
         cosine_similarity(embedder.embed(y_gt), p);
}

double paa(const std::vector<AttributionRecord>& records) {
  if (records.empty()) raise(ErrorCode::UndefinedMetric, "paa: no records");
  std::size_t correct = 0;
  for (const auto& record : records) {
    if (record.lift_correct > record.lift_wrong) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

double persona_margin(const std::vector<AttributionRecord>& records) {
  if (records.empty()) raise(ErrorCode::UndefinedMetric, "persona_margin: no records");
  double sum = 0.0;
  for (const auto& record : records) {
    sum += record.lift_correct - record.lift_wrong;
  }
  return sum / static_cast<double>(records.size());
}

}  // namespace afa
