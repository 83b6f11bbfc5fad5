#include "afa/embedding.hpp"

#include <cmath>

#include "afa/error.hpp"

namespace afa {

namespace {
constexpr double kZeroNormEps = 1e-12;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::None: return "None";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::DuplicateEnrollment: return "DuplicateEnrollment";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::OutOfOrderTurn: return "OutOfOrderTurn";
    case ErrorCode::RolloverFailed: return "RolloverFailed";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::ExtractionFailed: return "ExtractionFailed";
    case ErrorCode::EmbedUnavailable: return "EmbedUnavailable";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ScriptMiss: return "ScriptMiss";
    case ErrorCode::UndefinedCoverage: return "UndefinedCoverage";
    case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::IngestAborted: return "IngestAborted";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

double l2_norm(const EmbeddingVector& v) {
  double sum = 0.0;
  for (double x : v.values) sum += x * x;
  return std::sqrt(sum);
}

bool all_finite(const EmbeddingVector& v) {
  for (double x : v.values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

EmbeddingVector normalized(const EmbeddingVector& v) {
  if (v.empty()) raise(ErrorCode::DimMismatch, "cannot normalize an empty vector");
  double norm = l2_norm(v);
  if (norm < kZeroNormEps) {
    raise(ErrorCode::DegenerateVector, "cannot normalize a zero-norm vector");
  }
  EmbeddingVector out = v;
  for (double& x : out.values) x /= norm;
  return out;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.empty() || b.empty() || a.dim() != b.dim()) {
    raise(ErrorCode::DimMismatch,
          "cosine_similarity: dims " + std::to_string(a.dim()) + " vs " +
              std::to_string(b.dim()));
  }
  if (a.values == b.values) {
    if (l2_norm(a) < kZeroNormEps) {
      raise(ErrorCode::DegenerateVector, "cosine_similarity: zero-norm input");
    }
    return 1.0;  // exact self-similarity, immune to sqrt rounding
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na < kZeroNormEps * kZeroNormEps || nb < kZeroNormEps * kZeroNormEps) {
    raise(ErrorCode::DegenerateVector, "cosine_similarity: zero-norm input");
  }
  double sim = dot / (std::sqrt(na) * std::sqrt(nb));
  // Guard against floating drift outside [-1, 1].
  if (sim > 1.0) sim = 1.0;
  if (sim < -1.0) sim = -1.0;
  return sim;
}

EmbeddingVector normalized_mean(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) {
    raise(ErrorCode::InvalidArgument, "normalized_mean: empty vector set");
  }
  const std::size_t dim = vectors.front().dim();
  EmbeddingVector mean;
  mean.values.assign(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.dim() != dim) {
      raise(ErrorCode::DimMismatch, "normalized_mean: mixed dimensions");
    }
    for (std::size_t i = 0; i < dim; ++i) mean.values[i] += v.values[i];
  }
  for (double& x : mean.values) x /= static_cast<double>(vectors.size());
  return normalized(mean);
}

}  // namespace afa
