#include "afa/engine.hpp"

#include <algorithm>
#include <fstream>

#include "afa/error.hpp"
#include "afa/retrieval.hpp"

namespace afa {

namespace {

std::string padded_id(char kind, std::int64_t index) {
  std::string num = std::to_string(index);
  return std::string(1, kind) +
         std::string(num.size() < 6 ? 6 - num.size() : 0, '0') + num;
}

std::string sanitize_filename(const std::string& id) {
  std::string out;
  for (char c : id) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
        c == '.') {
      out += c;
    } else {
      out += '%';
    }
  }
  return out.empty() ? "_" : out;
}

}  // namespace

DialogueEngine::DialogueEngine(EngineConfig config,
                               std::shared_ptr<TextEmbedder> embedder,
                               std::shared_ptr<ChatBackend> backend,
                               Summarizer summarizer, AttributeExtractor extractor)
    : config_(config),
      embedder_(std::move(embedder)),
      backend_(std::move(backend)),
      summarizer_(summarizer ? std::move(summarizer) : fallback_summarize),
      extractor_(extractor ? std::move(extractor) : extract_attributes_fallback),
      registry_(config.new_speaker_prefix) {
  if (!embedder_ || !backend_) {
    raise(ErrorCode::InvalidArgument, "engine needs an embedder and a backend");
  }
  if (config_.retrieval_k == 0) {
    raise(ErrorCode::InvalidArgument, "retrieval_k must be >= 1");
  }
  // The no-persona condition pools everyone into one anonymous history.
  if (config_.condition == Condition::NoPersona) config_.routing_enabled = false;
}

UserMemory& DialogueEngine::memory_mut(const std::string& user_id) {
  auto it = memories_.find(user_id);
  if (it == memories_.end()) {
    it = memories_.emplace(user_id, UserMemory(user_id, config_.window_size)).first;
  }
  return it->second;
}

PersonaProfile& DialogueEngine::profile_mut(const std::string& user_id) {
  auto it = profiles_.find(user_id);
  if (it == profiles_.end()) {
    PersonaProfile profile;
    profile.user_id = user_id;
    it = profiles_.emplace(user_id, std::move(profile)).first;
  }
  return it->second;
}

std::vector<DialogueEngine::PoolEntry>& DialogueEngine::pool_mut(
    const std::string& user_id) {
  return pools_[user_id];
}

const UserMemory* DialogueEngine::memory(const std::string& user_id) const {
  auto it = memories_.find(user_id);
  return it == memories_.end() ? nullptr : &it->second;
}

const PersonaProfile* DialogueEngine::profile(const std::string& user_id) const {
  auto it = profiles_.find(user_id);
  return it == profiles_.end() ? nullptr : &it->second;
}

std::vector<std::string> DialogueEngine::known_users() const {
  std::vector<std::string> users;
  for (const auto& [id, _] : memories_) users.push_back(id);
  for (const auto& [id, _] : profiles_) {
    if (!memories_.count(id)) users.push_back(id);
  }
  std::sort(users.begin(), users.end());
  return users;
}

void DialogueEngine::set_onboarding_profile(const std::string& user_id,
                                            PersonaProfile profile) {
  profile.user_id = user_id;
  for (auto& attr : profile.attributes) attr.provenance = Provenance::Onboarding;
  profiles_[user_id] = std::move(profile);
}

std::string DialogueEngine::resolve_user(
    const std::optional<EmbeddingVector>& voice_embedding,
    const std::optional<std::string>& ground_truth_user, TurnResult& result) {
  if (!config_.routing_enabled) return kSharedUserId;
  if (ground_truth_user) return *ground_truth_user;
  if (!voice_embedding) {
    raise(ErrorCode::InvalidArgument,
          "routing enabled: need a voice embedding or a ground-truth user");
  }
  IdentityResolution res = registry_.identify(*voice_embedding, config_.speaker_threshold);
  result.new_speaker = res.outcome == IdentityOutcome::NewSpeaker;
  result.speaker_similarity = res.similarity;
  return res.user_id;
}

TurnResult DialogueEngine::handle_turn(
    const std::optional<EmbeddingVector>& voice_embedding,
    const std::optional<std::string>& ground_truth_user, const std::string& query) {
  if (query.empty()) raise(ErrorCode::InvalidArgument, "handle_turn: empty query");

  TurnResult result;
  const std::string user = resolve_user(voice_embedding, ground_truth_user, result);
  result.resolved_user = user;

  UserMemory& memory = memory_mut(user);
  PersonaProfile& profile = profile_mut(user);

  const EmbeddingVector query_embedding = embedder_->embed(query);

  // Retrieval searches the user's full history plus summaries-as-pseudo-turns.
  std::vector<PoolEntry>& pool = pool_mut(user);
  std::vector<std::pair<std::string, EmbeddingVector>> candidates;
  candidates.reserve(pool.size());
  for (const auto& entry : pool) candidates.emplace_back(entry.id, entry.embedding);
  std::vector<ContextItem> retrieved;
  if (!candidates.empty()) {
    for (const auto& id : top_k(query_embedding, candidates, config_.retrieval_k)) {
      auto it = std::find_if(pool.begin(), pool.end(),
                             [&](const PoolEntry& e) { return e.id == id; });
      retrieved.push_back(it->item);
    }
  }

  const PersonaProfile* prompt_profile =
      config_.condition == Condition::NoPersona ? nullptr : &profile;
  AssembledPrompt prompt =
      assemble_prompt(prompt_profile, retrieved, memory.recent_turns(), query,
                      config_.condition, config_.token_budget);
  result.prompt_text = prompt.full_text();

  const ChatRequest request =
      chat_request_from_prompt(prompt, config_.model_name, config_.temperature);
  result.response = backend_->complete(request);

  Turn turn;
  turn.turn_index = memory.next_turn_index();
  turn.query = query;
  turn.response = result.response;
  turn.embedding = query_embedding;
  const std::size_t summaries_before = memory.summaries().size();
  AppendOutcome appended = memory.append_turn(std::move(turn), summarizer_);
  result.rolled_over = appended.rolled_over;
  result.rollover_error = appended.rollover_error;

  // Keep the retrieval pool in step with the stored history.
  const Turn& stored = memory.full_history().back();
  ContextItem item{stored.query, stored.response, false, user};
  pool.push_back({padded_id('t', stored.turn_index), std::move(item), query_embedding});
  if (appended.rolled_over) {
    const SessionSummary& summary = memory.summaries().back();
    ContextItem pseudo{summary.summary_text, "", true, user};
    pool.push_back({padded_id('s', static_cast<std::int64_t>(summaries_before)),
                    std::move(pseudo), embedder_->embed(summary.summary_text)});
  }

  // Attributes extracted from this turn condition the next one.
  if (config_.condition == Condition::AdaptivePersona) {
    try {
      auto attrs = extractor_(query);
      profile = merge(std::move(profile), attrs, stored.turn_index);
    } catch (const std::exception& e) {
      result.sync_error = e.what();
    }
  }
  return result;
}

void DialogueEngine::rebuild_pool(const std::string& user_id) {
  const UserMemory& memory = memory_mut(user_id);
  std::vector<PoolEntry> pool;
  for (const auto& turn : memory.full_history()) {
    EmbeddingVector emb =
        turn.embedding ? *turn.embedding : embedder_->embed(turn.query);
    pool.push_back({padded_id('t', turn.turn_index),
                    ContextItem{turn.query, turn.response, false, user_id},
                    std::move(emb)});
  }
  std::int64_t summary_index = 0;
  for (const auto& summary : memory.summaries()) {
    pool.push_back({padded_id('s', summary_index++),
                    ContextItem{summary.summary_text, "", true, user_id},
                    embedder_->embed(summary.summary_text)});
  }
  pools_[user_id] = std::move(pool);
}

void DialogueEngine::save_state(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) raise(ErrorCode::IoError, "cannot create state dir " + dir.string());
  registry_.save(dir / "registry.json");
  for (const auto& [id, memory] : memories_) {
    memory.save(dir / (sanitize_filename(id) + ".memory.json"));
  }
  for (const auto& [id, profile] : profiles_) {
    std::ofstream out(dir / (sanitize_filename(id) + ".profile.json"));
    if (!out) raise(ErrorCode::IoError, "cannot write profile for " + id);
    out << profile.to_json().dump(2) << "\n";
  }
}

void DialogueEngine::load_state(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    raise(ErrorCode::IoError, "state dir missing: " + dir.string());
  }
  if (std::filesystem::exists(dir / "registry.json")) {
    registry_ = SpeakerRegistry::load(dir / "registry.json", config_.new_speaker_prefix);
  }
  memories_.clear();
  profiles_.clear();
  pools_.clear();
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 12 && name.ends_with(".memory.json")) {
      UserMemory memory = UserMemory::load(entry.path());
      std::string id = memory.user_id();
      memories_.emplace(id, std::move(memory));
      rebuild_pool(id);
    } else if (name.size() > 13 && name.ends_with(".profile.json")) {
      std::ifstream in(entry.path());
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        raise(ErrorCode::CorruptStore, "profile parse error at byte " +
                                           std::to_string(e.byte) + ": " + e.what());
      }
      PersonaProfile profile = PersonaProfile::from_json(doc);
      profiles_[profile.user_id] = std::move(profile);
    }
  }
}

}  // namespace afa
