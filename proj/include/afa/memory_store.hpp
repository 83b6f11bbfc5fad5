// Per-user conversation memory: a bounded temporary window that rolls over
// into permanent session summaries, plus an append-only history for retrieval.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "afa/embedding.hpp"

namespace afa {

struct Turn {
  std::int64_t turn_index = 0;
  std::string query;
  std::string response;
  std::optional<EmbeddingVector> embedding;  // of the query
  std::int64_t session_tag = 0;

  bool operator==(const Turn&) const = default;
};

struct SessionSummary {
  std::string user_id;
  std::string summary_text;
  std::int64_t range_begin = 0;  // inclusive turn_index range rolled over
  std::int64_t range_end = 0;
  std::int64_t created_at_turn = 0;

  bool operator==(const SessionSummary&) const = default;
};

// Summarizes a rolled-over window; a throwing summarizer defers the rollover.
using Summarizer = std::function<std::string(const std::vector<Turn>&)>;

// Deterministic stand-in summarizer: one "Q: .. | A: .." line per turn, first
// 12 tokens of each side, capped at 120 tokens total.
std::string fallback_summarize(const std::vector<Turn>& window);

struct AppendOutcome {
  bool rolled_over = false;
  std::optional<std::string> rollover_error;  // RolloverFailed detail, turn kept
};

class UserMemory {
 public:
  UserMemory() = default;
  UserMemory(std::string user_id, std::size_t window_size = 10)
      : user_id_(std::move(user_id)), window_size_(window_size ? window_size : 1) {}

  // Appends to the window and history; rolls the window into a summary once it
  // reaches window_size. Throws OutOfOrderTurn on a non-monotone index; a
  // summarizer failure is reported in the outcome and keeps the turn stored.
  AppendOutcome append_turn(Turn turn, const Summarizer& summarizer);

  // Last min(n, |recent|) turns in chronological order.
  std::vector<Turn> recent_turns(std::optional<std::size_t> n = std::nullopt) const;

  const std::string& user_id() const { return user_id_; }
  std::size_t window_size() const { return window_size_; }
  const std::vector<Turn>& recent() const { return recent_; }
  const std::vector<SessionSummary>& summaries() const { return summaries_; }
  const std::vector<Turn>& full_history() const { return full_history_; }
  std::int64_t next_turn_index() const;

  bool operator==(const UserMemory& other) const;

  nlohmann::json to_json() const;
  static UserMemory from_json(const nlohmann::json& doc);

  void save(const std::filesystem::path& path) const;
  static UserMemory load(const std::filesystem::path& path);

 private:
  std::string user_id_;
  std::vector<Turn> recent_;
  std::vector<SessionSummary> summaries_;
  std::vector<Turn> full_history_;
  std::size_t window_size_ = 10;
};

}  // namespace afa
