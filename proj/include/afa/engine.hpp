// One-turn orchestration: identify the speaker, load their memory and profile,
// retrieve context, assemble the conditioned prompt, complete, store the turn,
// and synchronize the persona.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "afa/backend.hpp"
#include "afa/memory_store.hpp"
#include "afa/persona.hpp"
#include "afa/prompt.hpp"
#include "afa/speaker_registry.hpp"
#include "afa/text_embedder.hpp"

namespace afa {

struct EngineConfig {
  Condition condition = Condition::AdaptivePersona;
  double speaker_threshold = 0.70;
  std::size_t retrieval_k = 3;
  std::size_t window_size = 10;
  bool routing_enabled = true;  // forced off by the NoPersona condition
  std::size_t token_budget = 3000;
  std::string model_name = "default";
  double temperature = 0.0;
  std::string new_speaker_prefix = "user-";
};

// Single anonymous identity used when routing is disabled.
inline constexpr const char* kSharedUserId = "_shared";

struct TurnResult {
  std::string response;
  std::string resolved_user;
  bool new_speaker = false;
  double speaker_similarity = 1.0;
  std::string prompt_text;  // full assembled prompt, recorded for audits
  bool rolled_over = false;
  std::optional<std::string> rollover_error;
  std::optional<std::string> sync_error;  // persona sync failures never abort
};

class DialogueEngine {
 public:
  DialogueEngine(EngineConfig config, std::shared_ptr<TextEmbedder> embedder,
                 std::shared_ptr<ChatBackend> backend, Summarizer summarizer = {},
                 AttributeExtractor extractor = {});

  // Exactly one of voice_embedding / ground_truth_user must be provided when
  // routing is enabled; both are ignored when it is not.
  TurnResult handle_turn(const std::optional<EmbeddingVector>& voice_embedding,
                         const std::optional<std::string>& ground_truth_user,
                         const std::string& query);

  void set_onboarding_profile(const std::string& user_id, PersonaProfile profile);

  const EngineConfig& config() const { return config_; }
  SpeakerRegistry& registry() { return registry_; }
  const UserMemory* memory(const std::string& user_id) const;
  const PersonaProfile* profile(const std::string& user_id) const;
  std::vector<std::string> known_users() const;

  void save_state(const std::filesystem::path& dir) const;
  void load_state(const std::filesystem::path& dir);

 private:
  struct PoolEntry {
    std::string id;  // "t<index>" for turns, "s<index>" for summaries
    ContextItem item;
    EmbeddingVector embedding;
  };

  UserMemory& memory_mut(const std::string& user_id);
  PersonaProfile& profile_mut(const std::string& user_id);
  std::vector<PoolEntry>& pool_mut(const std::string& user_id);
  void rebuild_pool(const std::string& user_id);
  std::string resolve_user(const std::optional<EmbeddingVector>& voice_embedding,
                           const std::optional<std::string>& ground_truth_user,
                           TurnResult& result);

  EngineConfig config_;
  std::shared_ptr<TextEmbedder> embedder_;
  std::shared_ptr<ChatBackend> backend_;
  Summarizer summarizer_;
  AttributeExtractor extractor_;
  SpeakerRegistry registry_;
  std::map<std::string, UserMemory> memories_;
  std::map<std::string, PersonaProfile> profiles_;
  std::map<std::string, std::vector<PoolEntry>> pools_;
};

}  // namespace afa
