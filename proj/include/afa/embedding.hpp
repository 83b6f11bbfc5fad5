// Fixed-dimension embedding vectors and the cosine arithmetic used for both
// voice identity matching and text retrieval.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace afa {

struct EmbeddingVector {
  std::vector<double> values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> v) : values(std::move(v)) {}
  EmbeddingVector(std::initializer_list<double> v) : values(v) {}

  std::size_t dim() const { return values.size(); }
  bool empty() const { return values.empty(); }

  bool operator==(const EmbeddingVector& other) const = default;
};

double l2_norm(const EmbeddingVector& v);

// Throws DegenerateVector if v has (near-)zero norm, DimMismatch if empty.
EmbeddingVector normalized(const EmbeddingVector& v);

// dot(a,b) / (|a||b|). Throws DimMismatch on unequal dims or empty inputs and
// DegenerateVector when either vector has zero norm.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Normalized mean of a non-empty set of same-dimension vectors.
EmbeddingVector normalized_mean(std::span<const EmbeddingVector> vectors);

bool all_finite(const EmbeddingVector& v);

}  // namespace afa
