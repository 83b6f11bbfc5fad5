// Text-embedding providers: a deterministic hashed bag-of-words fallback and a
// remote client speaking the common embedding-API wire shape.
#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "afa/embedding.hpp"

namespace afa {

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;

  // L2-normalized vector of dim(); same text always yields the same vector.
  // Throws EmbedUnavailable when the provider cannot serve the request.
  virtual EmbeddingVector embed(const std::string& text) = 0;
  virtual std::size_t dim() const = 0;
};

// Lowercase, strip punctuation, whitespace-tokenize; each token is hashed
// (64-bit FNV-1a) into one of dim buckets with a sign bit, counts accumulated
// and L2-normalized. Texts with no tokens map to a reserved unit vector.
class HashedBagEmbedder final : public TextEmbedder {
 public:
  explicit HashedBagEmbedder(std::size_t dim = 256) : dim_(dim ? dim : 256) {}

  EmbeddingVector embed(const std::string& text) override;
  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
};

struct RemoteEmbedderConfig {
  std::string url;         // e.g. http://host:port/v1/embeddings
  std::string model;
  std::string api_key_env = "AFA_API_KEY";
  std::size_t dim = 0;     // 0: accept whatever the provider returns
  int max_retries = 3;
  int initial_delay_ms = 200;
};

// POST {"model": .., "input": [text]} -> {"data": [{"embedding": [..]}]}.
class RemoteEmbedder final : public TextEmbedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  EmbeddingVector embed(const std::string& text) override;
  std::size_t dim() const override { return config_.dim; }

 private:
  RemoteEmbedderConfig config_;
};

std::uint64_t fnv1a_hash(const std::string& data);

}  // namespace afa
