// Structured persona profiles across six attribute categories, merge rules,
// deterministic rendering, and attribute extraction from user queries.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace afa {

enum class PersonaCategory {
  Demographics,
  Career,
  MotivationsValues,
  DecisionStyle,
  Preferences,
  EmotionalTriggers,
};

const char* category_name(PersonaCategory category);
std::optional<PersonaCategory> category_from_name(const std::string& name);

enum class Provenance { Onboarding, Synchronized };

struct PersonaAttribute {
  PersonaCategory category = PersonaCategory::Preferences;
  std::string key;    // normalized: lowercase, trimmed
  std::string value;
  Provenance provenance = Provenance::Synchronized;
  std::int64_t updated_at_turn = 0;

  bool operator==(const PersonaAttribute&) const = default;
};

struct PersonaProfile {
  std::string user_id;
  std::optional<std::string> free_text;  // narrative description, immutable after onboarding
  std::vector<PersonaAttribute> attributes;

  bool empty() const { return !free_text && attributes.empty(); }
  const PersonaAttribute* find(PersonaCategory category, const std::string& key) const;

  bool operator==(const PersonaProfile&) const = default;

  nlohmann::json to_json() const;
  static PersonaProfile from_json(const nlohmann::json& doc);
};

// Novel (category, key) pairs are appended; an existing pair with a different
// value is replaced, marked Synchronized, and stamped with turn_index. An
// identical value is left untouched, which makes merge idempotent.
PersonaProfile merge(PersonaProfile profile, const std::vector<PersonaAttribute>& new_attrs,
                     std::int64_t turn_index);

// Sentinel emitted when a profile carries no information at all.
inline constexpr const char* kEmptyPersonaText = "No persona information available.";

// free_text first, then one "category.key: value" line per attribute in
// (category, key) order. Byte-deterministic.
std::string render_persona(const PersonaProfile& profile);

using AttributeExtractor =
    std::function<std::vector<PersonaAttribute>(const std::string& query)>;

// Rule-based extractor over a small pattern table:
//   "i work as (a) X" / "i am a/an X" -> Career.occupation
//   "i love X" / "i like X"           -> Preferences.likes
//   "i hate X" / "i dislike X"        -> Preferences.dislikes
//   "i am N years old"                -> Demographics.age
//   "my goal is X"                    -> MotivationsValues.goal
std::vector<PersonaAttribute> extract_attributes_fallback(const std::string& query);

}  // namespace afa
