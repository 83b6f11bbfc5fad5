// Pluggable chat-completion providers: a generic HTTP client, a scripted
// replay backend, an echo backend, and a synthetic persona-injecting generator
// used for directional attribution experiments.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "afa/metrics.hpp"
#include "afa/prompt.hpp"

namespace afa {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::string model_name;
};

// system message carries the instruction plus context; last user message is
// the raw query (backends key their lookups on it).
ChatRequest chat_request_from_prompt(const AssembledPrompt& prompt,
                                     const std::string& model_name,
                                     double temperature = 0.0);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  // Throws BackendUnavailable (network) or ScriptMiss (scripted lookup).
  virtual std::string complete(const ChatRequest& request) = 0;
};

class EchoBackend final : public ChatBackend {
 public:
  std::string complete(const ChatRequest& request) override;
};

enum class ScriptKeyMode { ExactQuery, QueryPlusPersonaDigest };

class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::map<std::string, std::string> script,
                           ScriptKeyMode key_mode = ScriptKeyMode::ExactQuery)
      : script_(std::move(script)), key_mode_(key_mode) {}

  static ScriptedBackend from_jsonl(const std::filesystem::path& path,
                                    ScriptKeyMode key_mode = ScriptKeyMode::ExactQuery);

  std::string complete(const ChatRequest& request) override;

 private:
  std::map<std::string, std::string> script_;
  ScriptKeyMode key_mode_;
};

struct HttpBackendConfig {
  std::string url;  // e.g. http://host:port/v1/chat/completions
  std::string model;
  std::string api_key_env = "AFA_API_KEY";
  int max_retries = 3;
  int initial_delay_ms = 200;
};

// Standard chat-completion wire shape: messages array in,
// choices[0].message.content out.
class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {}

  std::string complete(const ChatRequest& request) override;

  // Request serialization for logs; the Authorization value never appears.
  static std::string loggable_request(const ChatRequest& request,
                                      const HttpBackendConfig& config);

 private:
  HttpBackendConfig config_;
};

// Synthetic generator for directional attribution runs. Returns the scripted
// ground-truth response for the query, concatenated with the top-3
// IDF-weighted content words of the persona block when one is present. With
// no persona block (or only the empty-persona sentinel) it echoes the words
// of the latest context user utterance instead, so unrouted mixed-history
// runs drift toward whoever spoke last; with neither, the ground truth is
// returned verbatim.
class PersonaInjectingBackend final : public ChatBackend {
 public:
  PersonaInjectingBackend(std::map<std::string, std::string> ground_truth_script,
                          const std::vector<std::string>& corpus_documents);

  std::string complete(const ChatRequest& request) override;

  // Exposed for tests: the words that would be injected for a prompt.
  std::vector<std::string> injected_words(const ChatRequest& request) const;

 private:
  std::vector<std::string> top_content_words(const std::string& text,
                                             bool skip_scaffolding) const;

  std::map<std::string, std::string> script_;
  IdfTable idf_;
};

const std::string& last_user_message(const ChatRequest& request);

}  // namespace afa
