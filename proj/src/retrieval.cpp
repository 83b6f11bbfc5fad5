#include "afa/retrieval.hpp"

#include <algorithm>

#include "afa/error.hpp"

namespace afa {

std::vector<std::string> top_k(
    const EmbeddingVector& query,
    const std::vector<std::pair<std::string, EmbeddingVector>>& candidates,
    std::size_t k) {
  if (k == 0) raise(ErrorCode::InvalidArgument, "top_k: k must be >= 1");
  std::vector<std::pair<double, const std::string*>> scored;
  scored.reserve(candidates.size());
  for (const auto& [id, emb] : candidates) {
    scored.emplace_back(cosine_similarity(query, emb), &id);
  }
  auto better = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  };
  if (k < scored.size()) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  std::vector<std::string> ids;
  ids.reserve(scored.size());
  for (const auto& [score, id] : scored) ids.push_back(*id);
  return ids;
}

}  // namespace afa
