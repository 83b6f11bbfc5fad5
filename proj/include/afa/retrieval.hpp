// Exact top-k cosine search over small candidate pools.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "afa/embedding.hpp"

namespace afa {

// Ids of the k highest-cosine candidates, descending similarity with ties
// broken by the smaller id. Returns fewer than k when candidates are fewer.
std::vector<std::string> top_k(
    const EmbeddingVector& query,
    const std::vector<std::pair<std::string, EmbeddingVector>>& candidates,
    std::size_t k);

}  // namespace afa
