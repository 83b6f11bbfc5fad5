// Deterministic synthetic miniature of the PAT record format, used for tests
// and desk-scale evaluation runs. Each persona carries a unique occupation and
// three unique marker interests so attribution is decidable from text alone.
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "afa/eval.hpp"

namespace afa {

struct FixtureSpec {
  std::size_t n_personas = 30;           // enough for 15 disjoint pairs
  std::size_t scenarios_per_persona = 2;
  std::size_t turns_per_scenario = 10;
};

// Template-generated records, fully deterministic: no randomness involved.
std::vector<PatRecord> make_fixture_records(const FixtureSpec& spec = {});

// Writes the records as PAT-format JSONL.
void write_fixture_jsonl(const std::filesystem::path& path,
                         const FixtureSpec& spec = {});

}  // namespace afa
