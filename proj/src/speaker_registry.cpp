#include "afa/speaker_registry.hpp"

#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "afa/error.hpp"

namespace afa {

SpeakerRegistry::SpeakerRegistry(std::string new_id_prefix)
    : prefix_(std::move(new_id_prefix)) {}

SpeakerRegistry::SpeakerRegistry(const SpeakerRegistry& other) {
  std::shared_lock lock(other.mutex_);
  speakers_ = other.speakers_;
  dim_ = other.dim_;
  next_id_ = other.next_id_;
  prefix_ = other.prefix_;
}

SpeakerRegistry& SpeakerRegistry::operator=(const SpeakerRegistry& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  speakers_ = other.speakers_;
  dim_ = other.dim_;
  next_id_ = other.next_id_;
  prefix_ = other.prefix_;
  return *this;
}

void SpeakerRegistry::enroll(const std::string& user_id,
                             std::vector<EmbeddingVector> embeddings) {
  if (user_id.empty()) raise(ErrorCode::InvalidArgument, "enroll: empty user_id");
  if (embeddings.empty()) {
    raise(ErrorCode::InvalidArgument, "enroll: no embeddings for " + user_id);
  }
  std::unique_lock lock(mutex_);
  if (speakers_.count(user_id)) {
    raise(ErrorCode::DuplicateEnrollment, "user already enrolled: " + user_id);
  }
  const std::size_t dim = embeddings.front().dim();
  if (dim_ != 0 && dim != dim_) {
    raise(ErrorCode::DimMismatch,
          "enroll: dim " + std::to_string(dim) + " does not match registry dim " +
              std::to_string(dim_));
  }
  for (const auto& e : embeddings) {
    if (e.dim() != dim) raise(ErrorCode::DimMismatch, "enroll: mixed dims for " + user_id);
    if (!all_finite(e)) raise(ErrorCode::InvalidArgument, "enroll: non-finite embedding");
  }
  SpeakerEnrollment entry;
  entry.user_id = user_id;
  entry.centroid = normalized_mean(embeddings);
  entry.embeddings = std::move(embeddings);
  speakers_.emplace(user_id, std::move(entry));
  if (dim_ == 0) dim_ = dim;
}

IdentityResolution SpeakerRegistry::best_locked(const EmbeddingVector& probe) const {
  IdentityResolution res;
  res.similarity = -1.0;
  for (const auto& [id, entry] : speakers_) {
    double sim = cosine_similarity(probe, entry.centroid);
    // Strict > keeps the lexicographically smallest id on ties; map order is
    // already lexicographic.
    if (res.user_id.empty() || sim > res.similarity) {
      res.similarity = sim;
      res.user_id = id;
    }
  }
  return res;
}

std::optional<std::pair<std::string, double>> SpeakerRegistry::best_match(
    const EmbeddingVector& probe) const {
  std::shared_lock lock(mutex_);
  if (speakers_.empty()) return std::nullopt;
  if (probe.dim() != dim_) {
    raise(ErrorCode::DimMismatch, "best_match: probe dim mismatch");
  }
  auto res = best_locked(probe);
  return std::make_pair(res.user_id, res.similarity);
}

std::string SpeakerRegistry::mint_user_id_locked() {
  while (true) {
    std::ostringstream oss;
    oss << prefix_;
    std::string num = std::to_string(next_id_++);
    oss << std::string(num.size() < 4 ? 4 - num.size() : 0, '0') << num;
    std::string candidate = oss.str();
    if (!speakers_.count(candidate)) return candidate;
  }
}

IdentityResolution SpeakerRegistry::identify(const EmbeddingVector& probe,
                                             double threshold) {
  {
    std::shared_lock lock(mutex_);
    if (!speakers_.empty()) {
      if (probe.dim() != dim_) {
        raise(ErrorCode::DimMismatch, "identify: probe dim mismatch");
      }
      IdentityResolution res = best_locked(probe);
      res.threshold_used = threshold;
      if (res.similarity >= threshold) {
        res.outcome = IdentityOutcome::Matched;
        return res;
      }
    }
  }
  // Below threshold or empty registry: serialize the registration path and
  // re-check, since a concurrent identify may have enrolled a match meanwhile.
  std::unique_lock lock(mutex_);
  IdentityResolution res;
  res.threshold_used = threshold;
  if (!speakers_.empty()) {
    if (probe.dim() != dim_) {
      raise(ErrorCode::DimMismatch, "identify: probe dim mismatch");
    }
    res = best_locked(probe);
    res.threshold_used = threshold;
    if (res.similarity >= threshold) {
      res.outcome = IdentityOutcome::Matched;
      return res;
    }
  }
  if (!all_finite(probe) || probe.empty()) {
    raise(ErrorCode::InvalidArgument, "identify: invalid probe");
  }
  res.outcome = IdentityOutcome::NewSpeaker;
  res.user_id = mint_user_id_locked();
  SpeakerEnrollment entry;
  entry.user_id = res.user_id;
  entry.embeddings = {probe};
  entry.centroid = normalized(probe);
  speakers_.emplace(res.user_id, std::move(entry));
  if (dim_ == 0) dim_ = probe.dim();
  return res;
}

std::size_t SpeakerRegistry::size() const {
  std::shared_lock lock(mutex_);
  return speakers_.size();
}

std::size_t SpeakerRegistry::dim() const {
  std::shared_lock lock(mutex_);
  return dim_;
}

bool SpeakerRegistry::contains(const std::string& user_id) const {
  std::shared_lock lock(mutex_);
  return speakers_.count(user_id) > 0;
}

std::optional<SpeakerEnrollment> SpeakerRegistry::enrollment(
    const std::string& user_id) const {
  std::shared_lock lock(mutex_);
  auto it = speakers_.find(user_id);
  if (it == speakers_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> SpeakerRegistry::user_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  ids.reserve(speakers_.size());
  for (const auto& [id, _] : speakers_) ids.push_back(id);
  return ids;
}

nlohmann::json SpeakerRegistry::to_json() const {
  std::shared_lock lock(mutex_);
  nlohmann::json speakers = nlohmann::json::array();
  for (const auto& [id, entry] : speakers_) {
    nlohmann::json embs = nlohmann::json::array();
    for (const auto& e : entry.embeddings) embs.push_back(e.values);
    speakers.push_back({{"user_id", id},
                        {"embeddings", std::move(embs)},
                        {"centroid", entry.centroid.values}});
  }
  return {{"dim", dim_}, {"speakers", std::move(speakers)}};
}

SpeakerRegistry SpeakerRegistry::from_json(const nlohmann::json& doc,
                                           std::string new_id_prefix) {
  SpeakerRegistry reg(std::move(new_id_prefix));
  if (!doc.is_object() || !doc.contains("dim") || !doc.contains("speakers")) {
    raise(ErrorCode::CorruptStore, "registry document missing dim/speakers");
  }
  for (const auto& s : doc.at("speakers")) {
    std::vector<EmbeddingVector> embs;
    for (const auto& e : s.at("embeddings")) {
      embs.emplace_back(e.get<std::vector<double>>());
    }
    reg.enroll(s.at("user_id").get<std::string>(), std::move(embs));
  }
  if (reg.dim_ == 0) reg.dim_ = doc.at("dim").get<std::size_t>();
  // Recover the id counter from previously minted ids so replays cannot collide.
  for (const auto& [id, _] : reg.speakers_) {
    if (id.rfind(reg.prefix_, 0) == 0) {
      const std::string suffix = id.substr(reg.prefix_.size());
      if (!suffix.empty() &&
          suffix.find_first_not_of("0123456789") == std::string::npos) {
        std::uint64_t n = std::stoull(suffix);
        if (n >= reg.next_id_) reg.next_id_ = n + 1;
      }
    }
  }
  return reg;
}

void SpeakerRegistry::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << to_json().dump(2) << "\n";
}

SpeakerRegistry SpeakerRegistry::load(const std::filesystem::path& path,
                                      std::string new_id_prefix) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::CorruptStore,
          "registry parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    return from_json(doc, std::move(new_id_prefix));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorCode::CorruptStore, std::string("registry malformed: ") + e.what());
  }
}

std::map<std::string, std::vector<EmbeddingVector>> read_embeddings_jsonl(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read " + path.string());
  std::map<std::string, std::vector<EmbeddingVector>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
      out[doc.at("speaker").get<std::string>()].emplace_back(
          doc.at("embedding").get<std::vector<double>>());
    } catch (const std::exception& e) {
      raise(ErrorCode::CorruptStore,
            "embeddings line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SyntheticSpeaker> make_synthetic_speakers(std::size_t n_speakers,
                                                      std::size_t samples_per_speaker,
                                                      std::size_t dim,
                                                      double noise_scale,
                                                      std::uint64_t seed) {
  if (n_speakers == 0 || samples_per_speaker == 0) {
    raise(ErrorCode::InvalidArgument, "make_synthetic_speakers: empty request");
  }
  if (dim < n_speakers) dim = n_speakers;  // keep base vectors orthogonal
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<SyntheticSpeaker> speakers;
  speakers.reserve(n_speakers);
  for (std::size_t i = 0; i < n_speakers; ++i) {
    SyntheticSpeaker spk;
    std::string num = std::to_string(i);
    spk.user_id = "spk-" + std::string(num.size() < 3 ? 3 - num.size() : 0, '0') + num;
    for (std::size_t s = 0; s < samples_per_speaker; ++s) {
      EmbeddingVector v;
      v.values.assign(dim, 0.0);
      v.values[i] = 1.0;
      if (noise_scale > 0.0) {
        for (std::size_t d = 0; d < dim; ++d) v.values[d] += noise_scale * gauss(rng);
      }
      spk.samples.push_back(normalized(v));
    }
    speakers.push_back(std::move(spk));
  }
  return speakers;
}

ValidationResult validate_identification(const std::vector<SyntheticSpeaker>& speakers,
                                         std::size_t enroll_n, std::size_t test_n,
                                         double threshold) {
  if (enroll_n == 0 || test_n == 0) {
    raise(ErrorCode::InsufficientSamples, "validate: enroll_n and test_n must be > 0");
  }
  for (const auto& spk : speakers) {
    if (spk.samples.size() < enroll_n + test_n) {
      raise(ErrorCode::InsufficientSamples,
            spk.user_id + " has " + std::to_string(spk.samples.size()) +
                " samples, needs " + std::to_string(enroll_n + test_n));
    }
  }
  SpeakerRegistry registry("probe-");
  for (const auto& spk : speakers) {
    std::vector<EmbeddingVector> enrollment(spk.samples.begin(),
                                            spk.samples.begin() + enroll_n);
    registry.enroll(spk.user_id, std::move(enrollment));
  }
  ValidationResult result;
  double sim_sum = 0.0;
  std::size_t correct = 0;
  for (const auto& spk : speakers) {
    for (std::size_t t = enroll_n; t < enroll_n + test_n; ++t) {
      IdentityResolution res = registry.identify(spk.samples[t], threshold);
      sim_sum += res.similarity;
      if (res.outcome == IdentityOutcome::Matched && res.user_id == spk.user_id) {
        ++correct;
      }
      ++result.decisions;
    }
  }
  result.accuracy =
      result.decisions ? static_cast<double>(correct) / result.decisions : 0.0;
  result.mean_similarity = result.decisions ? sim_sum / result.decisions : 0.0;
  return result;
}

}  // namespace afa
