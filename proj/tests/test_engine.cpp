#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "afa/engine.hpp"
#include "afa/error.hpp"

using namespace afa;

namespace {

std::shared_ptr<TextEmbedder> embedder() {
  return std::make_shared<HashedBagEmbedder>(128);
}

DialogueEngine make_engine(Condition condition,
                           std::shared_ptr<ChatBackend> backend = nullptr) {
  EngineConfig config;
  config.condition = condition;
  if (!backend) backend = std::make_shared<EchoBackend>();
  return DialogueEngine(config, embedder(), std::move(backend));
}

}  // namespace

TEST_CASE("no-persona: different speakers share one anonymous memory") {
  DialogueEngine engine = make_engine(Condition::NoPersona);
  auto r1 = engine.handle_turn(std::nullopt, std::string("alice"), "first question");
  auto r2 = engine.handle_turn(std::nullopt, std::string("bob"), "second question");
  CHECK(r1.resolved_user == kSharedUserId);
  CHECK(r2.resolved_user == kSharedUserId);
  const UserMemory* shared = engine.memory(kSharedUserId);
  REQUIRE(shared != nullptr);
  CHECK(shared->full_history().size() == 2);
  CHECK(r1.prompt_text.find(kPersonaHeader) == std::string::npos);
  CHECK(r2.prompt_text.find(kPersonaHeader) == std::string::npos);
  // the second prompt sees the first speaker's turn from the shared pool
  CHECK(r2.prompt_text.find("first question") != std::string::npos);
}

TEST_CASE("constant persona stays byte-identical across turns") {
  DialogueEngine engine = make_engine(Condition::ConstantPersona);
  PersonaProfile onboarding;
  onboarding.free_text = "Maya is a florist who loves brass bands.";
  engine.set_onboarding_profile("maya", onboarding);
  const auto before = engine.profile("maya")->to_json();
  for (int i = 0; i < 20; ++i) {
    engine.handle_turn(std::nullopt, std::string("maya"),
                       "i love puzzle nights, question " + std::to_string(i));
  }
  CHECK(engine.profile("maya")->to_json() == before);
}

TEST_CASE("adaptive persona: turn t's attributes condition turn t+1") {
  DialogueEngine engine = make_engine(Condition::AdaptivePersona);
  auto first =
      engine.handle_turn(std::nullopt, std::string("u"), "I work as a nurse these days");
  // the extraction happens after the response, so this prompt has no persona yet
  CHECK(first.prompt_text.find("Career.occupation: nurse") == std::string::npos);
  const PersonaProfile* profile = engine.profile("u");
  REQUIRE(profile != nullptr);
  REQUIRE(profile->find(PersonaCategory::Career, "occupation") != nullptr);
  CHECK(profile->find(PersonaCategory::Career, "occupation")->value ==
        "nurse these days");

  auto second = engine.handle_turn(std::nullopt, std::string("u"), "what should i cook");
  CHECK(second.prompt_text.find("Career.occupation: nurse these days") !=
        std::string::npos);
}

TEST_CASE("isolation: prompts only carry the speaker's own content") {
  DialogueEngine engine = make_engine(Condition::AdaptivePersona);
  PersonaProfile alice_profile, bob_profile;
  alice_profile.free_text = "Alice keeps orchids and plays saxophone.";
  bob_profile.free_text = "Bob carves driftwood and collects fossils.";
  engine.set_onboarding_profile("alice", alice_profile);
  engine.set_onboarding_profile("bob", bob_profile);

  for (int i = 0; i < 8; ++i) {
    auto ra = engine.handle_turn(std::nullopt, std::string("alice"),
                                 "alice asks about orchid care round " + std::to_string(i));
    auto rb = engine.handle_turn(std::nullopt, std::string("bob"),
                                 "bob asks about driftwood finish round " + std::to_string(i));
    CHECK(ra.prompt_text.find("bob") == std::string::npos);
    CHECK(ra.prompt_text.find("driftwood") == std::string::npos);
    CHECK(ra.prompt_text.find("fossils") == std::string::npos);
    CHECK(rb.prompt_text.find("alice") == std::string::npos);
    CHECK(rb.prompt_text.find("orchid") == std::string::npos);
    CHECK(rb.prompt_text.find("saxophone") == std::string::npos);
  }
  CHECK(engine.memory("alice")->full_history().size() == 8);
  CHECK(engine.memory("bob")->full_history().size() == 8);
}

TEST_CASE("voice routing: new speakers get fresh memories") {
  EngineConfig config;
  config.condition = Condition::AdaptivePersona;
  config.speaker_threshold = 0.7;
  DialogueEngine engine(config, embedder(), std::make_shared<EchoBackend>());
  engine.registry().enroll("enrolled", {EmbeddingVector{1, 0}});

  auto match = engine.handle_turn(EmbeddingVector{1, 0}, std::nullopt, "hello there");
  CHECK(match.resolved_user == "enrolled");
  CHECK_FALSE(match.new_speaker);

  auto fresh = engine.handle_turn(EmbeddingVector{0, 1}, std::nullopt, "who am i");
  CHECK(fresh.new_speaker);
  CHECK(fresh.resolved_user == "user-0001");
  CHECK(engine.memory("user-0001")->full_history().size() == 1);
  CHECK(engine.registry().size() == 2);

  CHECK_THROWS_AS(engine.handle_turn(std::nullopt, std::nullopt, "no identity"), Error);
}

TEST_CASE("rollover happens inside the engine and summaries join retrieval") {
  EngineConfig config;
  config.condition = Condition::NoPersona;
  config.window_size = 3;
  DialogueEngine engine(config, embedder(), std::make_shared<EchoBackend>());
  TurnResult last;
  for (int i = 0; i < 3; ++i) {
    last = engine.handle_turn(std::nullopt, std::nullopt,
                              "question about topic " + std::to_string(i));
  }
  CHECK(last.rolled_over);
  const UserMemory* memory = engine.memory(kSharedUserId);
  CHECK(memory->summaries().size() == 1);
  CHECK(memory->recent().empty());

  // the summary pseudo-turn is retrievable
  auto next = engine.handle_turn(std::nullopt, std::nullopt, "question about topic 0");
  CHECK(next.prompt_text.find("Summary:") != std::string::npos);
}

TEST_CASE("deterministic transcripts and state round-trip") {
  auto run = [](const std::filesystem::path& dir) {
    EngineConfig config;
    config.condition = Condition::AdaptivePersona;
    DialogueEngine engine(config, embedder(), std::make_shared<EchoBackend>());
    std::string transcript;
    for (int i = 0; i < 12; ++i) {
      auto result = engine.handle_turn(std::nullopt, std::string("u"),
                                       "i like board games, round " + std::to_string(i));
      transcript += result.prompt_text;
      transcript += "\n--\n";
      transcript += result.response;
    }
    engine.save_state(dir);
    return transcript;
  };
  const auto base = std::filesystem::temp_directory_path() / "afa_engine_test";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base / "a");
  std::filesystem::create_directories(base / "b");
  const std::string t1 = run(base / "a");
  const std::string t2 = run(base / "b");
  CHECK(t1 == t2);

  // byte-identical persisted state
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  for (const auto& entry : std::filesystem::directory_iterator(base / "a")) {
    const auto other = base / "b" / entry.path().filename();
    CHECK(slurp(entry.path()) == slurp(other));
  }

  // reload continues the same conversation
  EngineConfig config;
  config.condition = Condition::AdaptivePersona;
  DialogueEngine engine(config, embedder(), std::make_shared<EchoBackend>());
  engine.load_state(base / "a");
  REQUIRE(engine.memory("u") != nullptr);
  CHECK(engine.memory("u")->full_history().size() == 12);
  CHECK(engine.memory("u")->summaries().size() == 1);
  auto result = engine.handle_turn(std::nullopt, std::string("u"), "one more round");
  CHECK(engine.memory("u")->full_history().size() == 13);
  CHECK(engine.profile("u")->find(PersonaCategory::Preferences, "likes") != nullptr);
  std::filesystem::remove_all(base);
}

TEST_CASE("backend failures propagate; persona sync failures do not") {
  struct FailingBackend final : ChatBackend {
    std::string complete(const ChatRequest&) override {
      raise(ErrorCode::BackendUnavailable, "down");
    }
  };
  DialogueEngine down = make_engine(Condition::AdaptivePersona,
                                    std::make_shared<FailingBackend>());
  CHECK_THROWS_AS(down.handle_turn(std::nullopt, std::string("u"), "hello"), Error);
  // the failed turn is not stored
  CHECK(down.memory("u")->full_history().empty());

  EngineConfig config;
  config.condition = Condition::AdaptivePersona;
  AttributeExtractor broken = [](const std::string&) -> std::vector<PersonaAttribute> {
    raise(ErrorCode::ExtractionFailed, "parser exploded");
  };
  DialogueEngine engine(config, embedder(), std::make_shared<EchoBackend>(), {}, broken);
  auto result = engine.handle_turn(std::nullopt, std::string("u"), "i like jazz");
  CHECK(result.response == "ECHO: i like jazz");
  REQUIRE(result.sync_error.has_value());
  CHECK(engine.memory("u")->full_history().size() == 1);
}

TEST_CASE("engine defaults follow the configured protocol") {
  EngineConfig config;
  CHECK(config.retrieval_k == 3);
  CHECK(config.window_size == 10);
  CHECK(config.speaker_threshold == 0.70);
  CHECK(config.condition == Condition::AdaptivePersona);
  CHECK(config.routing_enabled);
}
