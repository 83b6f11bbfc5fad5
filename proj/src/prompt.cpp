#include "afa/prompt.hpp"

#include <sstream>

#include "afa/error.hpp"

namespace afa {

const char* condition_name(Condition condition) {
  switch (condition) {
    case Condition::NoPersona: return "no-persona";
    case Condition::ConstantPersona: return "constant";
    case Condition::AdaptivePersona: return "adaptive";
  }
  return "no-persona";
}

std::optional<Condition> condition_from_name(const std::string& name) {
  if (name == "no-persona" || name == "none") return Condition::NoPersona;
  if (name == "constant") return Condition::ConstantPersona;
  if (name == "adaptive") return Condition::AdaptivePersona;
  return std::nullopt;
}

std::size_t count_whitespace_tokens(const std::string& text) {
  std::istringstream iss(text);
  std::string token;
  std::size_t count = 0;
  while (iss >> token) ++count;
  return count;
}

std::string AssembledPrompt::full_text() const {
  std::string out = system_block;
  if (!context_block.empty()) {
    out += "\n\n";
    out += context_block;
  }
  out += "\n\n";
  out += user_block;
  return out;
}

namespace {

std::string render_context(const std::vector<ContextItem>& retrieved,
                           const std::vector<Turn>& recent) {
  std::string out;
  auto add_block = [&](const std::string& block) {
    if (!out.empty()) out += "\n\n";
    out += block;
  };
  for (const auto& item : retrieved) {
    if (item.is_summary) {
      add_block(std::string(kRetrievedHeader) + "\nSummary: " + item.query);
    } else {
      add_block(std::string(kRetrievedHeader) + "\nUser: " + item.query +
                "\nAssistant: " + item.response);
    }
  }
  for (const auto& turn : recent) {
    add_block(std::string(kRecentHeader) + "\nUser: " + turn.query +
              "\nAssistant: " + turn.response);
  }
  return out;
}

}  // namespace

AssembledPrompt assemble_prompt(const PersonaProfile* profile,
                                const std::vector<ContextItem>& retrieved,
                                const std::vector<Turn>& recent,
                                const std::string& query, Condition condition,
                                std::size_t token_budget) {
  if (query.empty()) raise(ErrorCode::InvalidArgument, "assemble_prompt: empty query");
  if (condition == Condition::NoPersona && profile != nullptr) {
    raise(ErrorCode::InvalidArgument,
          "assemble_prompt: NoPersona condition forbids a persona profile");
  }

  AssembledPrompt prompt;
  prompt.condition = condition;
  prompt.system_block = kBaseInstruction;
  if (condition != Condition::NoPersona && profile != nullptr) {
    prompt.system_block += "\n\n";
    prompt.system_block += kPersonaHeader;
    prompt.system_block += "\n" + render_persona(*profile);
  }
  prompt.user_block = query;

  std::vector<ContextItem> kept_retrieved = retrieved;
  std::vector<Turn> kept_recent = recent;
  prompt.context_block = render_context(kept_retrieved, kept_recent);
  // Oldest recent turns go first, then the lowest-ranked retrieved items.
  while (count_whitespace_tokens(prompt.context_block) > token_budget &&
         (!kept_recent.empty() || !kept_retrieved.empty())) {
    if (!kept_recent.empty()) {
      kept_recent.erase(kept_recent.begin());
    } else {
      kept_retrieved.pop_back();
    }
    prompt.context_block = render_context(kept_retrieved, kept_recent);
  }
  return prompt;
}

}  // namespace afa
