// Contextual prompt assembly: persona block, retrieved and recent exchanges,
// current query, under a whitespace-token budget.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "afa/memory_store.hpp"
#include "afa/persona.hpp"

namespace afa {

enum class Condition { NoPersona, ConstantPersona, AdaptivePersona };

const char* condition_name(Condition condition);
std::optional<Condition> condition_from_name(const std::string& name);

// One entry of the context block: a past exchange or a session summary
// standing in as a pseudo-turn. user_tag records whose memory it came from.
struct ContextItem {
  std::string query;
  std::string response;
  bool is_summary = false;
  std::string user_tag;
};

struct AssembledPrompt {
  std::string system_block;   // base instruction, plus persona when conditioned
  std::string context_block;  // retrieved exchanges then recent conversation
  std::string user_block;     // current query
  Condition condition = Condition::NoPersona;

  std::string full_text() const;
};

// Markers shared with prompt consumers that parse sections back out.
inline constexpr const char* kBaseInstruction =
    "You are a personal assistant. Use what you know about the user to answer "
    "helpfully.";
inline constexpr const char* kPersonaHeader = "User persona:";
inline constexpr const char* kRetrievedHeader = "Relevant past exchange:";
inline constexpr const char* kRecentHeader = "Recent conversation:";

// Deterministic template. profile must be null in the NoPersona condition.
// When the context exceeds token_budget whitespace tokens, the oldest recent
// turns are dropped first, then the lowest-ranked retrieved items.
AssembledPrompt assemble_prompt(const PersonaProfile* profile,
                                const std::vector<ContextItem>& retrieved,
                                const std::vector<Turn>& recent,
                                const std::string& query, Condition condition,
                                std::size_t token_budget = 3000);

std::size_t count_whitespace_tokens(const std::string& text);

}  // namespace afa
