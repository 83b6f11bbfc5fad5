#include "afa/memory_store.hpp"

#include <fstream>
#include <sstream>

#include "afa/error.hpp"

namespace afa {

namespace {

std::vector<std::string> split_ws(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream iss(text);
  std::string token;
  while (iss >> token) out.push_back(token);
  return out;
}

std::string first_tokens(const std::string& text, std::size_t n) {
  auto tokens = split_ws(text);
  if (tokens.size() > n) tokens.resize(n);
  std::string joined;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) joined += ' ';
    joined += tokens[i];
  }
  return joined;
}

nlohmann::json turn_to_json(const Turn& t) {
  nlohmann::json j = {{"i", t.turn_index},
                      {"q", t.query},
                      {"r", t.response},
                      {"session", t.session_tag}};
  if (t.embedding) {
    j["emb"] = t.embedding->values;
  } else {
    j["emb"] = nullptr;
  }
  return j;
}

Turn turn_from_json(const nlohmann::json& j) {
  Turn t;
  t.turn_index = j.at("i").get<std::int64_t>();
  t.query = j.at("q").get<std::string>();
  t.response = j.at("r").get<std::string>();
  t.session_tag = j.at("session").get<std::int64_t>();
  if (j.contains("emb") && !j.at("emb").is_null()) {
    t.embedding = EmbeddingVector(j.at("emb").get<std::vector<double>>());
  }
  return t;
}

}  // namespace

std::string fallback_summarize(const std::vector<Turn>& window) {
  if (window.empty()) {
    raise(ErrorCode::InvalidArgument, "fallback_summarize: empty window");
  }
  constexpr std::size_t kSideTokens = 12;
  constexpr std::size_t kTotalTokens = 120;
  std::string text;
  for (const auto& turn : window) {
    if (!text.empty()) text += '\n';
    text += "Q: " + first_tokens(turn.query, kSideTokens) +
            " | A: " + first_tokens(turn.response, kSideTokens);
  }
  auto tokens = split_ws(text);
  if (tokens.size() <= kTotalTokens) return text;
  tokens.resize(kTotalTokens);
  std::string capped;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) capped += ' ';
    capped += tokens[i];
  }
  return capped;
}

std::int64_t UserMemory::next_turn_index() const {
  return full_history_.empty() ? 0 : full_history_.back().turn_index + 1;
}

AppendOutcome UserMemory::append_turn(Turn turn, const Summarizer& summarizer) {
  if (turn.query.empty()) {
    raise(ErrorCode::InvalidArgument, "append_turn: empty query");
  }
  const std::int64_t expected = next_turn_index();
  if (turn.turn_index != expected) {
    raise(ErrorCode::OutOfOrderTurn,
          "expected turn_index " + std::to_string(expected) + ", got " +
              std::to_string(turn.turn_index));
  }
  turn.session_tag = static_cast<std::int64_t>(summaries_.size());
  recent_.push_back(turn);
  full_history_.push_back(std::move(turn));

  AppendOutcome outcome;
  if (recent_.size() < window_size_) return outcome;

  std::string summary_text;
  try {
    summary_text = summarizer ? summarizer(recent_) : fallback_summarize(recent_);
  } catch (const std::exception& e) {
    // Rollover deferred: the window stays intact and the turn is kept.
    outcome.rollover_error = std::string("RolloverFailed: ") + e.what();
    return outcome;
  }
  SessionSummary summary;
  summary.user_id = user_id_;
  summary.summary_text = std::move(summary_text);
  summary.range_begin = recent_.front().turn_index;
  summary.range_end = recent_.back().turn_index;
  summary.created_at_turn = recent_.back().turn_index;
  summaries_.push_back(std::move(summary));
  recent_.clear();
  outcome.rolled_over = true;
  return outcome;
}

std::vector<Turn> UserMemory::recent_turns(std::optional<std::size_t> n) const {
  std::size_t count = n.value_or(recent_.size());
  if (count > recent_.size()) count = recent_.size();
  return {recent_.end() - static_cast<std::ptrdiff_t>(count), recent_.end()};
}

bool UserMemory::operator==(const UserMemory& other) const {
  return user_id_ == other.user_id_ && window_size_ == other.window_size_ &&
         recent_ == other.recent_ && summaries_ == other.summaries_ &&
         full_history_ == other.full_history_;
}

nlohmann::json UserMemory::to_json() const {
  nlohmann::json recent = nlohmann::json::array();
  for (const auto& t : recent_) recent.push_back(turn_to_json(t));
  nlohmann::json history = nlohmann::json::array();
  for (const auto& t : full_history_) history.push_back(turn_to_json(t));
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& s : summaries_) {
    summaries.push_back({{"user_id", s.user_id},
                         {"summary_text", s.summary_text},
                         {"covered_range", {s.range_begin, s.range_end}},
                         {"created_at_turn", s.created_at_turn}});
  }
  return {{"user_id", user_id_},
          {"window_size", window_size_},
          {"recent", std::move(recent)},
          {"summaries", std::move(summaries)},
          {"history", std::move(history)}};
}

UserMemory UserMemory::from_json(const nlohmann::json& doc) {
  UserMemory memory;
  memory.user_id_ = doc.at("user_id").get<std::string>();
  memory.window_size_ = doc.value("window_size", std::size_t{10});
  for (const auto& t : doc.at("recent")) memory.recent_.push_back(turn_from_json(t));
  for (const auto& t : doc.at("history")) {
    memory.full_history_.push_back(turn_from_json(t));
  }
  for (const auto& s : doc.at("summaries")) {
    SessionSummary summary;
    summary.user_id = s.at("user_id").get<std::string>();
    summary.summary_text = s.at("summary_text").get<std::string>();
    summary.range_begin = s.at("covered_range").at(0).get<std::int64_t>();
    summary.range_end = s.at("covered_range").at(1).get<std::int64_t>();
    summary.created_at_turn = s.at("created_at_turn").get<std::int64_t>();
    memory.summaries_.push_back(std::move(summary));
  }
  return memory;
}

void UserMemory::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << to_json().dump(2) << "\n";
}

UserMemory UserMemory::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::CorruptStore,
          "memory parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    return from_json(doc);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorCode::CorruptStore, std::string("memory malformed: ") + e.what());
  }
}

}  // namespace afa
