// Voice-embedding enrollment registry and identity resolution.
//
// Each enrolled speaker is matched against probes through the centroid of
// their enrollment vectors. Probes below the match threshold mint a new
// speaker id and register the probe as that speaker's first enrollment.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "afa/embedding.hpp"

namespace afa {

struct SpeakerEnrollment {
  std::string user_id;
  std::vector<EmbeddingVector> embeddings;
  EmbeddingVector centroid;  // normalized mean of embeddings
};

enum class IdentityOutcome { Matched, NewSpeaker };

struct IdentityResolution {
  IdentityOutcome outcome = IdentityOutcome::NewSpeaker;
  std::string user_id;
  double similarity = -1.0;  // -1 sentinel when the registry was empty
  double threshold_used = 0.0;
};

class SpeakerRegistry {
 public:
  explicit SpeakerRegistry(std::string new_id_prefix = "user-");
  SpeakerRegistry(const SpeakerRegistry& other);
  SpeakerRegistry& operator=(const SpeakerRegistry& other);

  // Throws DuplicateEnrollment if user_id exists, DimMismatch on mixed dims.
  void enroll(const std::string& user_id, std::vector<EmbeddingVector> embeddings);

  // Matches probe against every centroid. Maximum similarity >= threshold
  // resolves to that speaker (ties to the lexicographically smallest user_id);
  // anything below mints a fresh id and registers the probe.
  IdentityResolution identify(const EmbeddingVector& probe, double threshold);

  // Read-only argmax over centroids; nullopt when the registry is empty.
  std::optional<std::pair<std::string, double>> best_match(const EmbeddingVector& probe) const;

  std::size_t size() const;
  std::size_t dim() const;
  bool contains(const std::string& user_id) const;
  std::optional<SpeakerEnrollment> enrollment(const std::string& user_id) const;
  std::vector<std::string> user_ids() const;  // sorted

  nlohmann::json to_json() const;
  static SpeakerRegistry from_json(const nlohmann::json& doc, std::string new_id_prefix = "user-");

  void save(const std::filesystem::path& path) const;
  static SpeakerRegistry load(const std::filesystem::path& path, std::string new_id_prefix = "user-");

 private:
  std::string mint_user_id_locked();
  IdentityResolution best_locked(const EmbeddingVector& probe) const;

  mutable std::shared_mutex mutex_;
  std::map<std::string, SpeakerEnrollment> speakers_;
  std::size_t dim_ = 0;
  std::uint64_t next_id_ = 1;
  std::string prefix_;
};

// Reads a JSONL file of {"speaker": str, "embedding": [..]} lines and groups
// the vectors per speaker, preserving line order.
std::map<std::string, std::vector<EmbeddingVector>> read_embeddings_jsonl(
    const std::filesystem::path& path);

struct SyntheticSpeaker {
  std::string user_id;
  std::vector<EmbeddingVector> samples;
};

// One unit base vector per speaker plus isotropic noise, renormalized.
std::vector<SyntheticSpeaker> make_synthetic_speakers(std::size_t n_speakers,
                                                      std::size_t samples_per_speaker,
                                                      std::size_t dim,
                                                      double noise_scale,
                                                      std::uint64_t seed);

struct ValidationResult {
  double accuracy = 0.0;
  double mean_similarity = 0.0;
  std::size_t decisions = 0;
};

// Enrolls each speaker on its first enroll_n samples and identifies the
// remaining test_n. Throws InsufficientSamples when a speaker has fewer than
// enroll_n + test_n samples.
ValidationResult validate_identification(const std::vector<SyntheticSpeaker>& speakers,
                                         std::size_t enroll_n, std::size_t test_n,
                                         double threshold);

}  // namespace afa
