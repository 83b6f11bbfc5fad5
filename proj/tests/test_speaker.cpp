#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "afa/error.hpp"
#include "afa/speaker_registry.hpp"

using namespace afa;

namespace {

EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  EmbeddingVector v;
  v.values.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) v.values.push_back(gauss(rng));
  return normalized(v);
}

}  // namespace

TEST_CASE("enroll computes the normalized-mean centroid") {
  SpeakerRegistry registry;
  registry.enroll("u1", {EmbeddingVector{1, 0}});
  auto entry = registry.enrollment("u1");
  REQUIRE(entry.has_value());
  CHECK(entry->centroid == EmbeddingVector{1, 0});

  SpeakerRegistry registry2;
  registry2.enroll("u1", {EmbeddingVector{1, 0}, EmbeddingVector{0, 1}});
  auto entry2 = registry2.enrollment("u1");
  CHECK(entry2->centroid.values[0] == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(entry2->centroid.values[1] == doctest::Approx(0.7071).epsilon(1e-4));
}

TEST_CASE("enroll rejects duplicates and mixed dims") {
  SpeakerRegistry registry;
  registry.enroll("u1", {EmbeddingVector{1, 0}});
  try {
    registry.enroll("u1", {EmbeddingVector{0, 1}});
    FAIL("expected DuplicateEnrollment");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateEnrollment);
  }
  try {
    registry.enroll("u2", {EmbeddingVector{0, 1, 2}});
    FAIL("expected DimMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimMismatch);
  }
  CHECK(registry.size() == 1);
}

TEST_CASE("identify: matches, tie-breaks, and new speakers") {
  SpeakerRegistry registry("guest-");
  registry.enroll("u1", {EmbeddingVector{1, 0}});
  registry.enroll("u2", {EmbeddingVector{0, 1}});

  SUBCASE("self match") {
    auto res = registry.identify(EmbeddingVector{1, 0}, 0.7);
    CHECK(res.outcome == IdentityOutcome::Matched);
    CHECK(res.user_id == "u1");
    CHECK(res.similarity == doctest::Approx(1.0));
  }
  SUBCASE("derived example: cosines 0.6 vs 0.8") {
    auto res = registry.identify(EmbeddingVector{0.6, 0.8}, 0.7);
    CHECK(res.outcome == IdentityOutcome::Matched);
    CHECK(res.user_id == "u2");
    CHECK(res.similarity == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("tie resolves to the lexicographically smallest id") {
    auto res = registry.identify(normalized(EmbeddingVector{1, 1}), 0.5);
    CHECK(res.outcome == IdentityOutcome::Matched);
    CHECK(res.user_id == "u1");
  }
  SUBCASE("below threshold mints a new speaker and registers the probe") {
    auto res = registry.identify(normalized(EmbeddingVector{1, 1}), 0.95);
    CHECK(res.outcome == IdentityOutcome::NewSpeaker);
    CHECK(res.user_id == "guest-0001");
    CHECK(registry.size() == 3);
    auto again = registry.identify(normalized(EmbeddingVector{1, 1}), 0.95);
    CHECK(again.outcome == IdentityOutcome::Matched);
    CHECK(again.user_id == "guest-0001");
  }
}

TEST_CASE("empty registry records the -1 sentinel") {
  SpeakerRegistry registry;
  auto res = registry.identify(EmbeddingVector{1, 0}, 0.7);
  CHECK(res.outcome == IdentityOutcome::NewSpeaker);
  CHECK(res.similarity == -1.0);
  CHECK(registry.size() == 1);
}

TEST_CASE("identify with a matched centroid never mutates the registry") {
  SpeakerRegistry registry;
  registry.enroll("u1", {EmbeddingVector{1, 0}, EmbeddingVector{0.9, 0.1}});
  const auto before = registry.to_json();
  registry.identify(EmbeddingVector{1, 0}, 0.5);
  CHECK(registry.to_json() == before);
}

TEST_CASE("identify agrees with brute-force argmax on random registries") {
  std::mt19937_64 rng(123);
  for (int iteration = 0; iteration < 300; ++iteration) {
    const std::size_t users = 1 + rng() % 50;
    const std::size_t dim = 2 + rng() % 62;
    SpeakerRegistry registry;
    std::vector<std::pair<std::string, EmbeddingVector>> centroids;
    for (std::size_t u = 0; u < users; ++u) {
      std::string id = "user" + std::to_string(100 + u);
      std::vector<EmbeddingVector> embeddings;
      const std::size_t count = 1 + rng() % 3;
      for (std::size_t e = 0; e < count; ++e) embeddings.push_back(random_unit(rng, dim));
      registry.enroll(id, embeddings);
      centroids.emplace_back(id, registry.enrollment(id)->centroid);
    }
    const EmbeddingVector probe = random_unit(rng, dim);
    std::string best_id;
    double best_sim = -2.0;
    for (const auto& [id, centroid] : centroids) {
      const double sim = cosine_similarity(probe, centroid);
      if (sim > best_sim || (sim == best_sim && id < best_id)) {
        best_sim = sim;
        best_id = id;
      }
    }
    auto res = registry.identify(probe, -1.0);  // threshold -1: always a match
    CHECK(res.outcome == IdentityOutcome::Matched);
    CHECK(res.user_id == best_id);
    CHECK(res.similarity == doctest::Approx(best_sim).epsilon(1e-12));
  }
}

TEST_CASE("registry json round-trip and jsonl ingest") {
  SpeakerRegistry registry;
  registry.enroll("alice", {EmbeddingVector{1, 0}, EmbeddingVector{0.8, 0.2}});
  registry.enroll("bob", {EmbeddingVector{0, 1}});
  const auto doc = registry.to_json();
  CHECK(doc.at("dim") == 2);
  CHECK(doc.at("speakers").size() == 2);
  SpeakerRegistry loaded = SpeakerRegistry::from_json(doc);
  CHECK(loaded.to_json() == doc);

  const auto dir = std::filesystem::temp_directory_path() / "afa_speaker_test";
  std::filesystem::create_directories(dir);
  registry.save(dir / "registry.json");
  SpeakerRegistry from_disk = SpeakerRegistry::load(dir / "registry.json");
  CHECK(from_disk.to_json() == doc);

  {
    std::ofstream out(dir / "emb.jsonl");
    out << R"({"speaker": "carol", "embedding": [1.0, 0.0]})" << "\n";
    out << R"({"speaker": "carol", "embedding": [0.0, 1.0]})" << "\n";
    out << R"({"speaker": "dave", "embedding": [0.5, 0.5]})" << "\n";
  }
  auto grouped = read_embeddings_jsonl(dir / "emb.jsonl");
  CHECK(grouped.size() == 2);
  CHECK(grouped.at("carol").size() == 2);
  CHECK(grouped.at("dave").size() == 1);

  {
    std::ofstream out(dir / "bad.json");
    out << "{\"dim\": 2, \"speakers\": [";  // truncated
  }
  try {
    SpeakerRegistry::load(dir / "bad.json");
    FAIL("expected CorruptStore");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptStore);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("minted ids replay after a round-trip") {
  SpeakerRegistry registry("user-");
  registry.identify(EmbeddingVector{1, 0}, 0.9);  // user-0001
  registry.identify(EmbeddingVector{0, 1}, 0.9);  // user-0002
  SpeakerRegistry loaded = SpeakerRegistry::from_json(registry.to_json());
  auto res = loaded.identify(normalized(EmbeddingVector{1, -1}), 0.9);
  CHECK(res.user_id == "user-0003");
}

TEST_CASE("synthetic validation: orthogonal speakers") {
  SUBCASE("zero noise is perfect") {
    auto speakers = make_synthetic_speakers(5, 4, 16, 0.0, 1);
    auto result = validate_identification(speakers, 2, 2, 0.7);
    CHECK(result.accuracy == 1.0);
    CHECK(result.mean_similarity == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(result.decisions == 10);
  }
  SUBCASE("paper-shaped run: 5 speakers, 5 enroll, 10 test") {
    auto speakers = make_synthetic_speakers(5, 15, 192, 0.05, 7);
    auto result = validate_identification(speakers, 5, 10, 0.7);
    CHECK(result.decisions == 50);
    CHECK(result.accuracy == 1.0);
    CHECK(result.mean_similarity > 0.7);
  }
  SUBCASE("identical base vectors cap accuracy at one half") {
    std::vector<SyntheticSpeaker> twins(2);
    twins[0].user_id = "spk-a";
    twins[1].user_id = "spk-b";
    for (int i = 0; i < 4; ++i) {
      twins[0].samples.push_back(EmbeddingVector{1, 0});
      twins[1].samples.push_back(EmbeddingVector{1, 0});
    }
    auto result = validate_identification(twins, 2, 2, 0.7);
    CHECK(result.accuracy <= 0.5);
  }
  SUBCASE("insufficient samples") {
    auto speakers = make_synthetic_speakers(2, 3, 8, 0.0, 1);
    CHECK_THROWS_AS(validate_identification(speakers, 2, 2, 0.7), Error);
  }
}

TEST_CASE("concurrent identify with occasional enrolls stays consistent") {
  SpeakerRegistry registry;
  for (int u = 0; u < 8; ++u) {
    EmbeddingVector base;
    base.values.assign(16, 0.0);
    base.values[static_cast<std::size_t>(u)] = 1.0;
    registry.enroll("user" + std::to_string(u), {base});
  }
  std::atomic<int> mismatches{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937_64 rng(static_cast<std::uint64_t>(t) + 1);
      for (int i = 0; i < 500; ++i) {
        const std::size_t target = rng() % 8;
        EmbeddingVector probe;
        probe.values.assign(16, 0.0);
        probe.values[target] = 1.0;
        auto res = registry.identify(probe, 0.7);
        if (res.user_id != "user" + std::to_string(target)) ++mismatches;
      }
    });
  }
  threads.emplace_back([&] {
    for (int i = 0; i < 20; ++i) {
      EmbeddingVector extra;
      extra.values.assign(16, 0.0);
      extra.values[8 + static_cast<std::size_t>(i) % 8] = 1.0;
      try {
        registry.enroll("late" + std::to_string(i), {extra});
      } catch (const Error&) {
        // duplicate enrolls are fine here
      }
    }
  });
  for (auto& thread : threads) thread.join();
  CHECK(mismatches.load() == 0);
}

TEST_CASE("probing with a user's own centroid always matches that user") {
  std::mt19937_64 rng(321);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t users = 2 + rng() % 20;
    const std::size_t dim = 4 + rng() % 28;
    SpeakerRegistry registry;
    for (std::size_t u = 0; u < users; ++u) {
      std::vector<EmbeddingVector> embeddings;
      const std::size_t count = 1 + rng() % 4;
      for (std::size_t e = 0; e < count; ++e) embeddings.push_back(random_unit(rng, dim));
      registry.enroll("user" + std::to_string(100 + u), embeddings);
    }
    for (const auto& id : registry.user_ids()) {
      auto res = registry.identify(registry.enrollment(id)->centroid, 1.0);
      CHECK(res.outcome == IdentityOutcome::Matched);
      CHECK(res.user_id == id);
    }
  }
}
