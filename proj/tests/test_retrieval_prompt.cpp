#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "afa/error.hpp"
#include "afa/prompt.hpp"
#include "afa/retrieval.hpp"
#include "afa/text_embedder.hpp"

using namespace afa;

TEST_CASE("fallback embedder: deterministic, normalized, order-invariant") {
  HashedBagEmbedder embedder(256);
  CHECK(embedder.embed("hello") == embedder.embed("hello"));
  CHECK(l2_norm(embedder.embed("any text at all")) ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(embedder.embed("a b") == embedder.embed("b a"));
  CHECK(embedder.embed("Hello, WORLD!") == embedder.embed("hello world"));
  CHECK_THROWS_AS(embedder.embed(""), Error);
  // punctuation-only text maps to the reserved direction, still unit norm
  CHECK(l2_norm(embedder.embed("?!...")) == doctest::Approx(1.0));
}

TEST_CASE("fallback embedder vocabulary overlap drives cosine") {
  HashedBagEmbedder embedder(256);
  CHECK(cosine_similarity(embedder.embed("alpha beta"), embedder.embed("gamma delta")) ==
        doctest::Approx(0.0).epsilon(1e-9));
  const double shared =
      cosine_similarity(embedder.embed("alpha beta"), embedder.embed("alpha delta"));
  CHECK(shared > 0.0);
  CHECK(cosine_similarity(embedder.embed("alpha beta"), embedder.embed("alpha beta")) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("top_k: clamping, ranking, and derived example") {
  std::vector<std::pair<std::string, EmbeddingVector>> candidates = {
      {"a", EmbeddingVector{1, 0}},
      {"b", EmbeddingVector{0, 1}},
      {"c", EmbeddingVector{0.6, 0.8}},
  };
  SUBCASE("derived: cosines 1.0, 0.0, 0.6") {
    auto ids = top_k(EmbeddingVector{1, 0}, candidates, 2);
    CHECK(ids == std::vector<std::string>{"a", "c"});
  }
  SUBCASE("k larger than pool returns everything ranked") {
    std::vector<std::pair<std::string, EmbeddingVector>> two = {
        {"x", EmbeddingVector{1, 0}}, {"y", EmbeddingVector{0, 1}}};
    auto ids = top_k(EmbeddingVector{0.9, 0.1}, two, 3);
    CHECK(ids == std::vector<std::string>{"x", "y"});
  }
  SUBCASE("ties break toward the smaller id") {
    std::vector<std::pair<std::string, EmbeddingVector>> tied = {
        {"zz", EmbeddingVector{1, 0}}, {"aa", EmbeddingVector{1, 0}}};
    auto ids = top_k(EmbeddingVector{1, 0}, tied, 1);
    CHECK(ids == std::vector<std::string>{"aa"});
  }
  SUBCASE("dim mismatch raises") {
    CHECK_THROWS_AS(top_k(EmbeddingVector{1, 0, 0}, candidates, 1), Error);
  }
}

TEST_CASE("top_k equals a full-sort brute force on random pools") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t pool = 1 + rng() % 1000;
    const std::size_t dim = 4 + rng() % 12;
    std::vector<std::pair<std::string, EmbeddingVector>> candidates;
    for (std::size_t i = 0; i < pool; ++i) {
      EmbeddingVector v;
      for (std::size_t d = 0; d < dim; ++d) v.values.push_back(gauss(rng));
      if (l2_norm(v) < 1e-9) v.values[0] = 1.0;
      char id[16];
      std::snprintf(id, sizeof id, "c%05zu", i);
      candidates.emplace_back(id, std::move(v));
    }
    EmbeddingVector query;
    for (std::size_t d = 0; d < dim; ++d) query.values.push_back(gauss(rng));
    if (l2_norm(query) < 1e-9) query.values[0] = 1.0;
    const std::size_t k = 1 + rng() % 8;

    std::vector<std::pair<double, std::string>> scored;
    for (const auto& [id, emb] : candidates) {
      scored.emplace_back(cosine_similarity(query, emb), id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) {
      expected.push_back(scored[i].second);
    }
    CHECK(top_k(query, candidates, k) == expected);

    // full-k request is a permutation of the pool ids
    auto all = top_k(query, candidates, pool);
    std::set<std::string> unique(all.begin(), all.end());
    CHECK(all.size() == pool);
    CHECK(unique.size() == pool);
  }
}

namespace {

Turn make_turn(std::int64_t index, const std::string& q, const std::string& r) {
  Turn turn;
  turn.turn_index = index;
  turn.query = q;
  turn.response = r;
  return turn;
}

}  // namespace

TEST_CASE("assemble_prompt: conditions and determinism") {
  PersonaProfile profile;
  profile.user_id = "u";
  profile.free_text = "Enjoys jazz.";

  SUBCASE("no-persona has no persona content") {
    auto prompt = assemble_prompt(nullptr, {}, {}, "hello", Condition::NoPersona);
    CHECK(prompt.system_block == kBaseInstruction);
    CHECK(prompt.system_block.find(kPersonaHeader) == std::string::npos);
    CHECK(prompt.context_block.empty());
    CHECK(prompt.user_block == "hello");
  }
  SUBCASE("no-persona rejects a profile") {
    CHECK_THROWS_AS(assemble_prompt(&profile, {}, {}, "hi", Condition::NoPersona),
                    Error);
  }
  SUBCASE("persona conditions embed the rendered profile") {
    auto prompt = assemble_prompt(&profile, {}, {}, "hello", Condition::ConstantPersona);
    CHECK(prompt.system_block.find(kPersonaHeader) != std::string::npos);
    CHECK(prompt.system_block.find("Enjoys jazz.") != std::string::npos);
  }
  SUBCASE("byte-identical across calls") {
    std::vector<ContextItem> retrieved = {{"old q", "old r", false, "u"}};
    std::vector<Turn> recent = {make_turn(4, "recent q", "recent r")};
    auto p1 = assemble_prompt(&profile, retrieved, recent, "query",
                              Condition::AdaptivePersona);
    auto p2 = assemble_prompt(&profile, retrieved, recent, "query",
                              Condition::AdaptivePersona);
    CHECK(p1.full_text() == p2.full_text());
    CHECK(p1.context_block.find(kRetrievedHeader) != std::string::npos);
    CHECK(p1.context_block.find(kRecentHeader) != std::string::npos);
    // retrieved before recent
    CHECK(p1.context_block.find(kRetrievedHeader) <
          p1.context_block.find(kRecentHeader));
  }
}

TEST_CASE("token budget drops oldest recent first, then low-ranked retrieved") {
  std::vector<ContextItem> retrieved;
  for (int i = 0; i < 3; ++i) {
    retrieved.push_back({"retrieved query " + std::to_string(i),
                         "retrieved response " + std::to_string(i), false, "u"});
  }
  std::vector<Turn> recent;
  for (int i = 0; i < 10; ++i) {
    recent.push_back(make_turn(i, "recent query " + std::to_string(i),
                               "recent response " + std::to_string(i)));
  }
  // Each retrieved block costs 11 tokens, each recent block 10.
  // Budget 55: all 3 retrieved (33) + the 2 newest recent (20) fit.
  auto prompt = assemble_prompt(nullptr, retrieved, recent, "q",
                                Condition::NoPersona, 55);
  CHECK(prompt.context_block.find("retrieved query 0") != std::string::npos);
  CHECK(prompt.context_block.find("retrieved query 2") != std::string::npos);
  CHECK(prompt.context_block.find("recent query 8") != std::string::npos);
  CHECK(prompt.context_block.find("recent query 9") != std::string::npos);
  CHECK(prompt.context_block.find("recent query 7") == std::string::npos);
  CHECK(prompt.context_block.find("recent query 0") == std::string::npos);

  // An even tighter budget starts shedding retrieved items from the tail.
  auto tight = assemble_prompt(nullptr, retrieved, recent, "q",
                               Condition::NoPersona, 25);
  CHECK(tight.context_block.find("retrieved query 0") != std::string::npos);
  CHECK(tight.context_block.find("retrieved query 1") != std::string::npos);
  CHECK(tight.context_block.find("retrieved query 2") == std::string::npos);
  CHECK(tight.context_block.find("recent") == std::string::npos);
  CHECK(count_whitespace_tokens(tight.context_block) <= 25);
}

TEST_CASE("summaries render with the summary label") {
  std::vector<ContextItem> retrieved = {{"Q: a | A: b", "", true, "u"}};
  auto prompt = assemble_prompt(nullptr, retrieved, {}, "q", Condition::NoPersona);
  CHECK(prompt.context_block.find("Summary: Q: a | A: b") != std::string::npos);
  CHECK(prompt.context_block.find("Assistant:") == std::string::npos);
}
