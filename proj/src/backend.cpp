#include "afa/backend.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"

#include "afa/error.hpp"
#include "afa/http_client.hpp"

namespace afa {

namespace {

void validate_request(const ChatRequest& request) {
  bool has_user = false;
  for (const auto& message : request.messages) {
    if (message.role != "system" && message.role != "user" &&
        message.role != "assistant") {
      raise(ErrorCode::InvalidArgument, "invalid message role: " + message.role);
    }
    if (message.role == "user") has_user = true;
  }
  if (!has_user) {
    raise(ErrorCode::InvalidArgument, "chat request needs at least one user message");
  }
  if (request.temperature < 0.0) {
    raise(ErrorCode::InvalidArgument, "temperature must be >= 0");
  }
}

// Render-scaffolding vocabulary that never counts as persona content.
const std::set<std::string>& scaffolding_tokens() {
  static const std::set<std::string> tokens = {
      "demographics", "career",     "motivationsvalues", "decisionstyle",
      "preferences",  "emotionaltriggers",
      "occupation",   "likes",      "dislikes",          "age",
      "goal",         "no",         "persona",           "information",
      "available",
  };
  return tokens;
}

// Extracts the persona section from the combined system content, if any.
std::string persona_section(const std::string& system_content) {
  auto start = system_content.find(kPersonaHeader);
  if (start == std::string::npos) return {};
  start += std::string(kPersonaHeader).size();
  auto end = system_content.find("\n\n", start);
  std::string section = end == std::string::npos
                            ? system_content.substr(start)
                            : system_content.substr(start, end - start);
  while (!section.empty() && (section.front() == '\n' || section.front() == ' ')) {
    section.erase(section.begin());
  }
  if (section == kEmptyPersonaText) return {};  // sentinel carries no information
  return section;
}

// The user utterance of the latest context entry: the last "Recent
// conversation" block when present, otherwise the first (top-ranked)
// retrieved block. Assistant lines are skipped so the echo reflects what the
// previous speaker actually said rather than earlier generated output.
std::string latest_context_exchange(const std::string& system_content) {
  auto block_text = [&](std::size_t header_pos, const char* header) -> std::string {
    std::size_t start = header_pos + std::string(header).size();
    auto end = system_content.find("\n\n", start);
    std::string block = end == std::string::npos
                            ? system_content.substr(start)
                            : system_content.substr(start, end - start);
    for (const char* prefix : {"\nUser: ", "\nSummary: "}) {
      std::size_t pos = block.find(prefix);
      if (pos == std::string::npos) continue;
      pos += std::string(prefix).size();
      auto line_end = block.find('\n', pos);
      return line_end == std::string::npos ? block.substr(pos)
                                           : block.substr(pos, line_end - pos);
    }
    return {};
  };
  auto recent = system_content.rfind(kRecentHeader);
  if (recent != std::string::npos) return block_text(recent, kRecentHeader);
  auto retrieved = system_content.find(kRetrievedHeader);
  if (retrieved != std::string::npos) return block_text(retrieved, kRetrievedHeader);
  return {};
}

}  // namespace

const std::string& last_user_message(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  raise(ErrorCode::InvalidArgument, "request has no user message");
}

ChatRequest chat_request_from_prompt(const AssembledPrompt& prompt,
                                     const std::string& model_name,
                                     double temperature) {
  ChatRequest request;
  request.model_name = model_name;
  request.temperature = temperature;
  std::string system = prompt.system_block;
  if (!prompt.context_block.empty()) {
    system += "\n\n";
    system += prompt.context_block;
  }
  request.messages.push_back({"system", std::move(system)});
  request.messages.push_back({"user", prompt.user_block});
  return request;
}

std::string EchoBackend::complete(const ChatRequest& request) {
  validate_request(request);
  return "ECHO: " + last_user_message(request);
}

ScriptedBackend ScriptedBackend::from_jsonl(const std::filesystem::path& path,
                                            ScriptKeyMode key_mode) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read script " + path.string());
  std::map<std::string, std::string> script;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json doc = nlohmann::json::parse(line);
      script[doc.at("key").get<std::string>()] =
          doc.at("response").get<std::string>();
    } catch (const std::exception& e) {
      raise(ErrorCode::CorruptStore,
            "script line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ScriptedBackend(std::move(script), key_mode);
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  validate_request(request);
  std::string key = last_user_message(request);
  if (key_mode_ == ScriptKeyMode::QueryPlusPersonaDigest) {
    std::string persona;
    for (const auto& message : request.messages) {
      if (message.role == "system") {
        persona = persona_section(message.content);
        if (!persona.empty()) break;
      }
    }
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(persona)));
    key += "||";
    key += digest;
  }
  auto it = script_.find(key);
  if (it == script_.end()) {
    raise(ErrorCode::ScriptMiss, "no scripted response for key: " + key);
  }
  return it->second;
}

std::string HttpBackend::complete(const ChatRequest& request) {
  validate_request(request);
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& message : request.messages) {
    messages.push_back({{"role", message.role}, {"content", message.content}});
  }
  nlohmann::json body = {
      {"model", request.model_name.empty() ? config_.model : request.model_name},
      {"temperature", request.temperature},
      {"messages", std::move(messages)}};
  HttpRequestOptions options;
  options.url = config_.url;
  options.api_key_env = config_.api_key_env;
  options.max_retries = config_.max_retries;
  options.initial_delay_ms = config_.initial_delay_ms;
  const std::string response =
      http_post_json(options, body.dump(), ErrorCode::BackendUnavailable);
  try {
    nlohmann::json doc = nlohmann::json::parse(response);
    std::string text =
        doc.at("choices").at(0).at("message").at("content").get<std::string>();
    if (text.empty()) {
      raise(ErrorCode::BackendUnavailable, "backend returned an empty completion");
    }
    return text;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorCode::BackendUnavailable,
          std::string("malformed completion response: ") + e.what());
  }
}

std::string HttpBackend::loggable_request(const ChatRequest& request,
                                          const HttpBackendConfig& config) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& message : request.messages) {
    messages.push_back({{"role", message.role}, {"content", message.content}});
  }
  // The bearer token is resolved at send time and intentionally left out.
  nlohmann::json doc = {{"url", config.url},
                        {"model", config.model},
                        {"api_key_env", config.api_key_env},
                        {"temperature", request.temperature},
                        {"messages", std::move(messages)}};
  return doc.dump();
}

PersonaInjectingBackend::PersonaInjectingBackend(
    std::map<std::string, std::string> ground_truth_script,
    const std::vector<std::string>& corpus_documents)
    : script_(std::move(ground_truth_script)),
      idf_(IdfTable::build(corpus_documents)) {}

std::vector<std::string> PersonaInjectingBackend::top_content_words(
    const std::string& text, bool skip_scaffolding) const {
  std::vector<std::string> tokens = tokenize(text);
  std::set<std::string> unique(tokens.begin(), tokens.end());
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& token : unique) {
    if (skip_scaffolding && scaffolding_tokens().count(token)) continue;
    ranked.emplace_back(idf_.weight(token), token);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> words;
  for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) {
    words.push_back(ranked[i].second);
  }
  return words;
}

std::vector<std::string> PersonaInjectingBackend::injected_words(
    const ChatRequest& request) const {
  std::string system_content;
  for (const auto& message : request.messages) {
    if (message.role == "system") {
      system_content = message.content;
      break;
    }
  }
  if (const std::string persona = persona_section(system_content); !persona.empty()) {
    return top_content_words(persona, /*skip_scaffolding=*/true);
  }
  if (const std::string exchange = latest_context_exchange(system_content);
      !exchange.empty()) {
    return top_content_words(exchange, /*skip_scaffolding=*/false);
  }
  return {};
}

std::string PersonaInjectingBackend::complete(const ChatRequest& request) {
  validate_request(request);
  const std::string& query = last_user_message(request);
  auto it = script_.find(query);
  if (it == script_.end()) {
    raise(ErrorCode::ScriptMiss, "no ground truth for query: " + query);
  }
  std::string response = it->second;
  for (const auto& word : injected_words(request)) {
    response += ' ';
    response += word;
  }
  return response;
}

}  // namespace afa
