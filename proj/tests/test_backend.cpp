#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "afa/backend.hpp"
#include "afa/error.hpp"
#include "afa/llm_adapters.hpp"
#include "afa/text_embedder.hpp"

using namespace afa;

namespace {

ChatRequest request_for(const std::string& query, const PersonaProfile* profile,
                        Condition condition,
                        const std::vector<ContextItem>& retrieved = {},
                        const std::vector<Turn>& recent = {}) {
  auto prompt = assemble_prompt(profile, retrieved, recent, query, condition);
  return chat_request_from_prompt(prompt, "test-model");
}

}  // namespace

TEST_CASE("echo backend returns the last user message") {
  EchoBackend backend;
  ChatRequest request;
  request.messages = {{"system", "s"}, {"user", "hi"}};
  CHECK(backend.complete(request) == "ECHO: hi");

  request.messages.push_back({"assistant", "mid"});
  request.messages.push_back({"user", "second"});
  CHECK(backend.complete(request) == "ECHO: second");
}

TEST_CASE("chat requests are validated") {
  EchoBackend backend;
  ChatRequest no_user;
  no_user.messages = {{"system", "only system"}};
  CHECK_THROWS_AS(backend.complete(no_user), Error);
  ChatRequest bad_role;
  bad_role.messages = {{"wizard", "zap"}, {"user", "hi"}};
  CHECK_THROWS_AS(backend.complete(bad_role), Error);
}

TEST_CASE("scripted backend: hit, miss, and persona-digest keys") {
  ScriptedBackend backend(std::map<std::string, std::string>{{"q1", "r1"}});
  ChatRequest request;
  request.messages = {{"user", "q1"}};
  CHECK(backend.complete(request) == "r1");

  request.messages = {{"user", "q2"}};
  try {
    backend.complete(request);
    FAIL("expected ScriptMiss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScriptMiss);
  }

  // persona-digest mode distinguishes identical queries under different personas
  PersonaProfile persona;
  persona.user_id = "u";
  persona.free_text = "Loves jazz.";
  auto with_persona = request_for("q1", &persona, Condition::ConstantPersona);
  ScriptedBackend digest_backend({}, ScriptKeyMode::QueryPlusPersonaDigest);
  try {
    digest_backend.complete(with_persona);
    FAIL("expected ScriptMiss");
  } catch (const Error& e) {
    const std::string message = e.what();
    CHECK(message.find("q1||") != std::string::npos);
  }
}

TEST_CASE("persona-injecting backend mirrors the prompt's persona") {
  std::map<std::string, std::string> script = {
      {"how should i plan my week", "plan around your morning shifts"}};
  // Mirrors the eval harness: queries, completions, and personas all count as
  // corpus documents, so template glue stays common and markers stay rare.
  std::vector<std::string> corpus = {
      "plan around your morning shifts",
      "Aria works as a nurse and treasures the saxophone.",
      "Bennett works as a carpenter and treasures the banjo.",
      "tell me about the festival that runs in june",
      "the june festival runs with music",
      "tell me about the morning schedule",
  };
  PersonaInjectingBackend backend(script, corpus);

  SUBCASE("no persona, no context: ground truth verbatim") {
    auto request = request_for("how should i plan my week", nullptr,
                               Condition::NoPersona);
    CHECK(backend.complete(request) == "plan around your morning shifts");
  }
  SUBCASE("persona digest appends its rare words") {
    PersonaProfile persona;
    persona.user_id = "a";
    persona.free_text = "Aria works as a nurse and treasures the saxophone.";
    auto request = request_for("how should i plan my week", &persona,
                               Condition::ConstantPersona);
    const std::string response = backend.complete(request);
    CHECK(response.rfind("plan around your morning shifts", 0) == 0);
    CHECK(response.find("saxophone") != std::string::npos);
    CHECK(response.find("aria") != std::string::npos);
    CHECK(backend.complete(request) == response);  // deterministic
  }
  SUBCASE("wrong persona carries the wrong user's words") {
    PersonaProfile wrong;
    wrong.user_id = "b";
    wrong.free_text = "Bennett works as a carpenter and treasures the banjo.";
    auto request = request_for("how should i plan my week", &wrong,
                               Condition::ConstantPersona);
    const std::string response = backend.complete(request);
    CHECK(response.find("banjo") != std::string::npos);
    CHECK(response.find("saxophone") == std::string::npos);
  }
  SUBCASE("empty-persona sentinel counts as no persona; context echoes instead") {
    PersonaProfile empty;
    empty.user_id = "x";
    std::vector<Turn> recent(1);
    recent[0].turn_index = 0;
    recent[0].query = "tell me about the banjo festival";
    recent[0].response = "the banjo festival runs in june";
    auto request = request_for("how should i plan my week", &empty,
                               Condition::AdaptivePersona, {}, recent);
    const std::string response = backend.complete(request);
    CHECK(response.rfind("plan around your morning shifts", 0) == 0);
    CHECK(response.find("banjo") != std::string::npos);
  }
  SUBCASE("script miss raises") {
    auto request = request_for("unknown query", nullptr, Condition::NoPersona);
    CHECK_THROWS_AS(backend.complete(request), Error);
  }
}

TEST_CASE("http backend: success, retry, exhaustion, and key scrubbing") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::atomic<int> fail_first{0};
  std::string seen_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req,
                                          httplib::Response& res) {
    ++hits;
    if (req.has_header("Authorization")) seen_auth = req.get_header_value("Authorization");
    if (fail_first.load() > 0) {
      --fail_first;
      res.status = 503;
      res.set_content("overloaded", "text/plain");
      return;
    }
    nlohmann::json body = nlohmann::json::parse(req.body);
    nlohmann::json reply = {
        {"choices",
         {{{"message",
            {{"role", "assistant"},
             {"content", "reply to " +
                             body.at("messages").back().at("content").get<std::string>()}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("AFA_TEST_KEY", "super-secret-token", 1);
  HttpBackendConfig config;
  config.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  config.model = "m";
  config.api_key_env = "AFA_TEST_KEY";
  config.max_retries = 2;
  config.initial_delay_ms = 1;

  ChatRequest request;
  request.model_name = "m";
  request.messages = {{"system", "s"}, {"user", "ping"}};

  SUBCASE("success round-trip with bearer auth") {
    HttpBackend backend(config);
    CHECK(backend.complete(request) == "reply to ping");
    CHECK(seen_auth == "Bearer super-secret-token");
  }
  SUBCASE("retries recover from transient 5xx") {
    fail_first = 2;
    hits = 0;
    HttpBackend backend(config);
    CHECK(backend.complete(request) == "reply to ping");
    CHECK(hits.load() == 3);
  }
  SUBCASE("exhausted retries raise BackendUnavailable with attempt count") {
    fail_first = 100;
    HttpBackend backend(config);
    try {
      backend.complete(request);
      FAIL("expected BackendUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BackendUnavailable);
      CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
    }
  }
  SUBCASE("serialized request never contains the credential") {
    const std::string logged = HttpBackend::loggable_request(request, config);
    CHECK(logged.find("super-secret-token") == std::string::npos);
    CHECK(logged.find("AFA_TEST_KEY") != std::string::npos);
  }

  server.stop();
  server_thread.join();
}

TEST_CASE("unreachable host raises BackendUnavailable") {
  HttpBackendConfig config;
  config.url = "http://127.0.0.1:1/v1/chat/completions";  // nothing listens here
  config.max_retries = 1;
  config.initial_delay_ms = 1;
  HttpBackend backend(config);
  ChatRequest request;
  request.messages = {{"user", "hi"}};
  CHECK_THROWS_AS(backend.complete(request), Error);
}

TEST_CASE("llm summarizer and extractor ride on a chat backend") {
  SUBCASE("summarizer sends the window and returns the reply") {
    struct CapturingBackend final : ChatBackend {
      std::string last_prompt;
      std::string complete(const ChatRequest& request) override {
        last_prompt = last_user_message(request);
        return "short summary of the session";
      }
    };
    auto backend = std::make_shared<CapturingBackend>();
    auto summarizer = make_llm_summarizer(backend, "Summarize this.");
    std::vector<Turn> window(2);
    window[0].query = "first question";
    window[0].response = "first answer";
    window[1].query = "second question";
    window[1].response = "second answer";
    CHECK(summarizer(window) == "short summary of the session");
    CHECK(backend->last_prompt.find("Summarize this.") != std::string::npos);
    CHECK(backend->last_prompt.find("first question") != std::string::npos);
    CHECK(backend->last_prompt.find("second answer") != std::string::npos);
  }
  SUBCASE("extractor parses a structured reply") {
    struct JsonBackend final : ChatBackend {
      std::string complete(const ChatRequest&) override {
        return R"([{"category": "Career", "key": "Occupation", "value": "nurse"},
                   {"category": "Preferences", "key": "likes", "value": "jazz"}])";
      }
    };
    auto extractor = make_llm_extractor(std::make_shared<JsonBackend>());
    auto attrs = extractor("i work as a nurse and i love jazz");
    REQUIRE(attrs.size() == 2);
    CHECK(attrs[0].category == PersonaCategory::Career);
    CHECK(attrs[0].value == "nurse");
    CHECK(attrs[1].category == PersonaCategory::Preferences);
  }
  SUBCASE("malformed replies raise ExtractionFailed") {
    struct NoiseBackend final : ChatBackend {
      std::string complete(const ChatRequest&) override { return "not json"; }
    };
    auto extractor = make_llm_extractor(std::make_shared<NoiseBackend>());
    try {
      extractor("hello");
      FAIL("expected ExtractionFailed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ExtractionFailed);
    }
    struct WrongShape final : ChatBackend {
      std::string complete(const ChatRequest&) override {
        return R"([{"category": "Wizardry", "key": "spells", "value": "many"}])";
      }
    };
    auto strict = make_llm_extractor(std::make_shared<WrongShape>());
    CHECK_THROWS_AS(strict("hello"), Error);
  }
}

TEST_CASE("remote embedder speaks the embedding wire shape") {
  httplib::Server server;
  std::string last_body;
  server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    last_body = req.body;
    nlohmann::json reply = {{"data", {{{"embedding", {3.0, 4.0}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteEmbedderConfig config;
  config.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/embeddings";
  config.model = "embed-model";
  config.max_retries = 1;
  config.initial_delay_ms = 1;
  RemoteEmbedder embedder(config);
  EmbeddingVector v = embedder.embed("hello world");
  CHECK(v.dim() == 2);
  CHECK(v.values[0] == doctest::Approx(0.6));  // normalized [3,4]
  CHECK(v.values[1] == doctest::Approx(0.8));
  nlohmann::json body = nlohmann::json::parse(last_body);
  CHECK(body.at("model") == "embed-model");
  CHECK(body.at("input").at(0) == "hello world");
  CHECK(embedder.dim() == 2);

  server.stop();
  server_thread.join();

  RemoteEmbedderConfig dead = config;
  dead.url = "http://127.0.0.1:1/v1/embeddings";
  RemoteEmbedder unreachable(dead);
  try {
    unreachable.embed("hello");
    FAIL("expected EmbedUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmbedUnavailable);
  }
}
