#include "afa/text_embedder.hpp"

#include <cctype>
#include <cmath>

#include "afa/error.hpp"
#include "afa/http_client.hpp"

#include "json.hpp"

namespace afa {

std::uint64_t fnv1a_hash(const std::string& data) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

EmbeddingVector HashedBagEmbedder::embed(const std::string& text) {
  if (text.empty()) raise(ErrorCode::InvalidArgument, "embed: empty text");
  EmbeddingVector out;
  out.values.assign(dim_, 0.0);
  std::string token;
  bool any = false;
  auto flush = [&] {
    if (token.empty()) return;
    const std::uint64_t h = fnv1a_hash(token);
    const std::size_t bucket = static_cast<std::size_t>(h % dim_);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    out.values[bucket] += sign;
    any = true;
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      token += static_cast<char>(std::tolower(c));
    } else if (c >= 0x80) {
      token += static_cast<char>(c);  // keep non-ASCII bytes inside tokens
    } else {
      flush();
    }
  }
  flush();
  if (!any) {
    // Punctuation-only input: reserved deterministic direction.
    out.values[0] = 1.0;
    return out;
  }
  double norm = 0.0;
  for (double x : out.values) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    // Signs cancelled exactly; fall back to the reserved direction.
    out.values[0] = 1.0;
    return out;
  }
  for (double& x : out.values) x /= norm;
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)) {}

EmbeddingVector RemoteEmbedder::embed(const std::string& text) {
  if (text.empty()) raise(ErrorCode::InvalidArgument, "embed: empty text");
  nlohmann::json body = {{"model", config_.model}, {"input", {text}}};
  HttpRequestOptions options;
  options.url = config_.url;
  options.api_key_env = config_.api_key_env;
  options.max_retries = config_.max_retries;
  options.initial_delay_ms = config_.initial_delay_ms;
  std::string response =
      http_post_json(options, body.dump(), ErrorCode::EmbedUnavailable);
  try {
    nlohmann::json doc = nlohmann::json::parse(response);
    auto values = doc.at("data").at(0).at("embedding").get<std::vector<double>>();
    if (config_.dim != 0 && values.size() != config_.dim) {
      raise(ErrorCode::DimMismatch,
            "remote embedding dim " + std::to_string(values.size()) +
                ", expected " + std::to_string(config_.dim));
    }
    if (config_.dim == 0) config_.dim = values.size();
    return normalized(EmbeddingVector(std::move(values)));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorCode::EmbedUnavailable,
          std::string("malformed embedding response: ") + e.what());
  }
}

}  // namespace afa
