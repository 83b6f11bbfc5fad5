#include "afa/persona.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <sstream>

#include "afa/error.hpp"

namespace afa {

namespace {

constexpr std::array<PersonaCategory, 6> kCategories = {
    PersonaCategory::Demographics,     PersonaCategory::Career,
    PersonaCategory::MotivationsValues, PersonaCategory::DecisionStyle,
    PersonaCategory::Preferences,      PersonaCategory::EmotionalTriggers,
};

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string normalize_key(const std::string& key) { return lowercase(trim(key)); }

}  // namespace

const char* category_name(PersonaCategory category) {
  switch (category) {
    case PersonaCategory::Demographics: return "Demographics";
    case PersonaCategory::Career: return "Career";
    case PersonaCategory::MotivationsValues: return "MotivationsValues";
    case PersonaCategory::DecisionStyle: return "DecisionStyle";
    case PersonaCategory::Preferences: return "Preferences";
    case PersonaCategory::EmotionalTriggers: return "EmotionalTriggers";
  }
  return "Preferences";
}

std::optional<PersonaCategory> category_from_name(const std::string& name) {
  for (auto category : kCategories) {
    if (name == category_name(category)) return category;
  }
  return std::nullopt;
}

const PersonaAttribute* PersonaProfile::find(PersonaCategory category,
                                             const std::string& key) const {
  for (const auto& attr : attributes) {
    if (attr.category == category && attr.key == key) return &attr;
  }
  return nullptr;
}

PersonaProfile merge(PersonaProfile profile,
                     const std::vector<PersonaAttribute>& new_attrs,
                     std::int64_t turn_index) {
  for (const auto& incoming : new_attrs) {
    PersonaAttribute attr = incoming;
    attr.key = normalize_key(attr.key);
    if (attr.key.empty() || attr.value.empty()) continue;
    auto it = std::find_if(profile.attributes.begin(), profile.attributes.end(),
                           [&](const PersonaAttribute& existing) {
                             return existing.category == attr.category &&
                                    existing.key == attr.key;
                           });
    if (it == profile.attributes.end()) {
      attr.updated_at_turn = turn_index;
      profile.attributes.push_back(std::move(attr));
    } else if (it->value != attr.value) {
      it->value = attr.value;
      it->provenance = Provenance::Synchronized;
      it->updated_at_turn = turn_index;
    }
  }
  return profile;
}

std::string render_persona(const PersonaProfile& profile) {
  if (profile.empty()) return kEmptyPersonaText;
  std::vector<const PersonaAttribute*> sorted;
  sorted.reserve(profile.attributes.size());
  for (const auto& attr : profile.attributes) sorted.push_back(&attr);
  std::sort(sorted.begin(), sorted.end(),
            [](const PersonaAttribute* a, const PersonaAttribute* b) {
              if (a->category != b->category) return a->category < b->category;
              return a->key < b->key;
            });
  std::string out;
  if (profile.free_text && !profile.free_text->empty()) out = *profile.free_text;
  for (const auto* attr : sorted) {
    if (!out.empty()) out += '\n';
    out += std::string(category_name(attr->category)) + "." + attr->key + ": " +
           attr->value;
  }
  return out.empty() ? kEmptyPersonaText : out;
}

std::vector<PersonaAttribute> extract_attributes_fallback(const std::string& query) {
  if (query.empty()) {
    raise(ErrorCode::InvalidArgument, "extract_attributes: empty query");
  }
  const std::string text = lowercase(query);

  struct Pattern {
    std::regex re;
    PersonaCategory category;
    const char* key;
  };
  // Values run until a clause boundary; leading articles are stripped below.
  static const std::string kValue = "([^,.;:!?]+?)(?=,|\\.|;|:|!|\\?| and | but |$)";
  static const std::vector<Pattern> kPatterns = {
      {std::regex("\\bi am (\\d+) years old"), PersonaCategory::Demographics, "age"},
      {std::regex("\\bi work as " + kValue), PersonaCategory::Career, "occupation"},
      {std::regex("\\bi am an? " + kValue), PersonaCategory::Career, "occupation"},
      {std::regex("\\bi love " + kValue), PersonaCategory::Preferences, "likes"},
      {std::regex("\\bi like " + kValue), PersonaCategory::Preferences, "likes"},
      {std::regex("\\bi hate " + kValue), PersonaCategory::Preferences, "dislikes"},
      {std::regex("\\bi dislike " + kValue), PersonaCategory::Preferences, "dislikes"},
      {std::regex("\\bmy goal is (?:to )?" + kValue), PersonaCategory::MotivationsValues,
       "goal"},
  };

  std::vector<std::pair<std::ptrdiff_t, PersonaAttribute>> hits;
  for (const auto& pattern : kPatterns) {
    auto begin = std::sregex_iterator(text.begin(), text.end(), pattern.re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      std::string value = trim((*it)[1].str());
      for (const char* article : {"a ", "an ", "the "}) {
        if (value.rfind(article, 0) == 0) {
          value = value.substr(std::string(article).size());
          break;
        }
      }
      value = trim(value);
      if (value.empty()) continue;
      PersonaAttribute attr;
      attr.category = pattern.category;
      attr.key = pattern.key;
      attr.value = value;
      attr.provenance = Provenance::Synchronized;
      // Skip duplicates produced by overlapping patterns within one query.
      bool seen = std::any_of(hits.begin(), hits.end(), [&](const auto& h) {
        return h.second.category == attr.category && h.second.key == attr.key &&
               h.second.value == attr.value;
      });
      if (!seen) hits.emplace_back(it->position(), std::move(attr));
    }
  }
  // Report attributes in the order they appear in the query.
  std::stable_sort(hits.begin(), hits.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<PersonaAttribute> out;
  out.reserve(hits.size());
  for (auto& [pos, attr] : hits) out.push_back(std::move(attr));
  return out;
}

nlohmann::json PersonaProfile::to_json() const {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& attr : attributes) {
    attrs.push_back(
        {{"category", category_name(attr.category)},
         {"key", attr.key},
         {"value", attr.value},
         {"provenance",
          attr.provenance == Provenance::Onboarding ? "Onboarding" : "Synchronized"},
         {"updated_at_turn", attr.updated_at_turn}});
  }
  nlohmann::json doc = {{"user_id", user_id}, {"attributes", std::move(attrs)}};
  if (free_text) {
    doc["free_text"] = *free_text;
  } else {
    doc["free_text"] = nullptr;
  }
  return doc;
}

PersonaProfile PersonaProfile::from_json(const nlohmann::json& doc) {
  PersonaProfile profile;
  profile.user_id = doc.at("user_id").get<std::string>();
  if (doc.contains("free_text") && !doc.at("free_text").is_null()) {
    profile.free_text = doc.at("free_text").get<std::string>();
  }
  for (const auto& a : doc.at("attributes")) {
    PersonaAttribute attr;
    auto category = category_from_name(a.at("category").get<std::string>());
    if (!category) {
      raise(ErrorCode::CorruptStore,
            "unknown persona category: " + a.at("category").get<std::string>());
    }
    attr.category = *category;
    attr.key = a.at("key").get<std::string>();
    attr.value = a.at("value").get<std::string>();
    attr.provenance = a.at("provenance").get<std::string>() == "Onboarding"
                          ? Provenance::Onboarding
                          : Provenance::Synchronized;
    attr.updated_at_turn = a.at("updated_at_turn").get<std::int64_t>();
    profile.attributes.push_back(std::move(attr));
  }
  return profile;
}

}  // namespace afa
