#include "afa/fixture.hpp"

#include <array>
#include <fstream>

#include "json.hpp"

#include "afa/error.hpp"

namespace afa {

namespace {

struct PersonaSeed {
  const char* name;
  const char* occupation;
  const char* marker_a;  // practiced interest
  const char* marker_b;  // kept at home
  const char* marker_c;  // outdoor pastime
};

// Names, occupations, and markers are pairwise unique across the table so
// every persona has text that no other persona shares.
constexpr std::array<PersonaSeed, 30> kPersonas = {{
    {"Aria", "nurse", "saxophone", "orchids", "kayaking"},
    {"Bennett", "carpenter", "banjo", "bonsai", "archery"},
    {"Carmen", "florist", "quilting", "terrarium", "snowshoeing"},
    {"Dmitri", "astronomer", "falconry", "marzipan", "dulcimer"},
    {"Elena", "baker", "origami", "driftwood", "astrolabe"},
    {"Farid", "geologist", "macrame", "sourdough", "geocaching"},
    {"Greta", "translator", "mosaics", "harmonica", "topiary"},
    {"Hiro", "beekeeper", "pottery", "birdwatching", "embroidery"},
    {"Imani", "architect", "calligraphy", "snorkeling", "accordion"},
    {"Jonas", "fisherman", "woodcarving", "lavender", "canoeing"},
    {"Keiko", "chemist", "fencing", "gingerbread", "mandolin"},
    {"Liam", "tailor", "weaving", "succulents", "bouldering"},
    {"Mirela", "librarian", "puppetry", "limoncello", "kitesurfing"},
    {"Nadia", "surveyor", "leatherwork", "peonies", "spelunking"},
    {"Owen", "winemaker", "glockenspiel", "candlemaking", "parkour"},
    {"Priya", "paramedic", "bookbinding", "hydrangeas", "paragliding"},
    {"Quentin", "blacksmith", "ventriloquism", "nougat", "skateboarding"},
    {"Rosa", "cartographer", "ikebana", "fossils", "unicycling"},
    {"Stefan", "dentist", "cheesemaking", "tulips", "slacklining"},
    {"Tamar", "glassblower", "papermaking", "kites", "windsurfing"},
    {"Ulrich", "locksmith", "enameling", "truffles", "orienteering"},
    {"Vera", "midwife", "whittling", "camellias", "rollerblading"},
    {"Wendell", "notary", "tapestry", "saffron", "bobsledding"},
    {"Ximena", "optician", "marquetry", "gardenias", "freediving"},
    {"Yusuf", "plumber", "scrimshaw", "kombucha", "curling"},
    {"Zofia", "radiologist", "filigree", "magnolias", "abseiling"},
    {"Anders", "saddler", "ceramics", "pistachios", "wakeboarding"},
    {"Beatriz", "illustrator", "lacquerware", "juniper", "tobogganing"},
    {"Caleb", "upholsterer", "millinery", "rosemary", "cricket"},
    {"Delphine", "veterinarian", "clockmaking", "thyme", "badminton"},
}};

constexpr std::array<const char*, 12> kScenarioPhrases = {
    "planning my community project",
    "learning a new language",
    "preparing for a job interview",
    "developing my short story",
    "organizing my hobby schedule",
    "building better habits",
    "handling a stressful week",
    "planning an upcoming trip",
    "choosing what to buy",
    "creating content for my blog",
    "improving communication with my friends",
    "coordinating family routines",
};

// Built from response-template vocabulary so these words stay common in the
// corpus and never outrank the persona markers.
constexpr std::array<const char*, 5> kValuePhrases = {
    "steady simple routines", "short written notes", "small fixed pieces",
    "fresh sunday energy", "three small milestones",
};

std::string replace_all(std::string text, const std::string& slot,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(slot, pos)) != std::string::npos) {
    text.replace(pos, slot.size(), value);
    pos += value.size();
  }
  return text;
}

std::string fill(const char* tpl, const PersonaSeed& persona,
                 const std::string& scenario_phrase) {
  std::string text = tpl;
  text = replace_all(std::move(text), "{N}", persona.name);
  text = replace_all(std::move(text), "{O}", persona.occupation);
  text = replace_all(std::move(text), "{A}", persona.marker_a);
  text = replace_all(std::move(text), "{B}", persona.marker_b);
  text = replace_all(std::move(text), "{C}", persona.marker_c);
  text = replace_all(std::move(text), "{P}", scenario_phrase);
  return text;
}

// One query and one ground-truth response per turn slot. Every query carries
// at least one persona-unique token, so queries are unique across the corpus
// and usable as exact script keys. Turn 0 and turn 5 carry extraction cues
// whose values reuse persona-text vocabulary.
constexpr std::array<const char*, 10> kQueryTemplates = {
    "I work as a {O} and I am getting started with {P}; could you outline a simple "
    "first step?",
    "Following up on that first step, how should I budget my time around my {A} "
    "sessions while {P}?",
    "Thanks, and does that change for {P} if looking after my {B} takes up most of "
    "my evenings?",
    "You mentioned pacing earlier; what milestones make sense for {P} before my next "
    "{C} outing?",
    "Could you suggest how a {O} like me should track progress on {P}?",
    "I love my {A}; how do I fit it in while {P} stays on schedule?",
    "What should I prepare next for {P}, given my {B} corner at home needs attention "
    "too?",
    "Almost there: any advice on staying motivated with {P} when {C} season arrives?",
    "As a {O}, which common mistakes in {P} should I avoid next week?",
    "Last question about {P}: how do I wrap up and review what my {A} practice "
    "taught me?",
};

constexpr std::array<const char*, 10> kResponseTemplates = {
    "Welcome, {N}. Since you work as a {O}, start {P} with one small scheduled block "
    "this week and note how it feels alongside your {A} routine.",
    "Block two short sessions around your {A} practice; a {O} schedule leaves gaps "
    "midweek that suit {P} nicely.",
    "If caring for the {B} fills your evenings, shift the work of {P} to mornings "
    "and keep the weekends for rest.",
    "Set three milestones this month and place them before your {C} outing so {P} "
    "never competes with it.",
    "Track {P} in a simple log, {N}; a busy {O} usually finds short notes after each "
    "shift the easiest habit to keep.",
    "Protect your {A} time first, then give {P} two fixed evenings; routines hold "
    "best when favorites come first.",
    "Tidy the {B} corner on Saturday, then use Sunday to push {P} forward while your "
    "energy is fresh.",
    "When {C} season arrives, scale {P} down to one touch per week; steady momentum "
    "matters more than volume.",
    "A {O} should avoid overcommitting; for {P}, skip perfectionism and finish small "
    "pieces on time, {N}.",
    "Review what the {A} practice taught you about patience, then close {P} with a "
    "short written summary.",
};

constexpr const char* kPersonaTemplate =
    "{N} works as a {O} and treasures the {A}. {N} keeps {B} at home and unwinds "
    "with {C}. {N} values {V} and likes plans that leave room for the {A}.";

}  // namespace

std::vector<PatRecord> make_fixture_records(const FixtureSpec& spec) {
  if (spec.n_personas == 0 || spec.n_personas > kPersonas.size()) {
    raise(ErrorCode::InvalidArgument,
          "fixture supports 1.." + std::to_string(kPersonas.size()) + " personas");
  }
  if (spec.turns_per_scenario == 0 ||
      spec.turns_per_scenario > kQueryTemplates.size()) {
    raise(ErrorCode::InvalidArgument,
          "fixture supports 1.." + std::to_string(kQueryTemplates.size()) +
              " turns per scenario");
  }
  if (spec.scenarios_per_persona == 0 ||
      spec.scenarios_per_persona > kScenarioPhrases.size()) {
    raise(ErrorCode::InvalidArgument, "fixture supports 1..12 scenarios per persona");
  }

  std::vector<PatRecord> records;
  records.reserve(spec.n_personas * spec.scenarios_per_persona * spec.turns_per_scenario);
  for (std::size_t p = 0; p < spec.n_personas; ++p) {
    const PersonaSeed& persona = kPersonas[p];
    std::string persona_id = "p" + std::string(p < 10 ? "0" : "") + std::to_string(p);
    std::string persona_text = fill(kPersonaTemplate, persona, "");
    persona_text = replace_all(std::move(persona_text), "{V}",
                               kValuePhrases[p % kValuePhrases.size()]);

    for (std::size_t s = 0; s < spec.scenarios_per_persona; ++s) {
      // 7 is coprime with 12, so each persona sees distinct scenarios.
      const std::size_t scenario_index = (p + 7 * s) % kScenarioPhrases.size();
      const std::string& scenario_name = kScenarioNames[scenario_index];
      const char* scenario_phrase = kScenarioPhrases[scenario_index];

      std::vector<std::pair<std::string, std::string>> history;
      for (std::size_t t = 0; t < spec.turns_per_scenario; ++t) {
        PatRecord record;
        record.persona_id = persona_id;
        record.persona_text = persona_text;
        record.scenario = scenario_name;
        record.query = fill(kQueryTemplates[t], persona, scenario_phrase);
        record.completion = fill(kResponseTemplates[t], persona, scenario_phrase);
        record.history = history;
        history.emplace_back(record.query, record.completion);
        records.push_back(std::move(record));
      }
    }
  }
  return records;
}

void write_fixture_jsonl(const std::filesystem::path& path, const FixtureSpec& spec) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write fixture " + path.string());
  for (const auto& record : make_fixture_records(spec)) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& [q, r] : record.history) history.push_back({q, r});
    nlohmann::json doc = {{"persona", record.persona_text},
                          {"scenario", record.scenario},
                          {"history", std::move(history)},
                          {"prompt", record.query},
                          {"completion", record.completion},
                          {"persona_id", record.persona_id}};
    out << doc.dump() << "\n";
  }
}

}  // namespace afa
