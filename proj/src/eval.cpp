#include "afa/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "afa/error.hpp"

namespace afa {

const std::vector<std::string> kScenarioNames = {
    "Project Planning",   "Language Learning", "Job Interview Preparation",
    "Story Development",  "Hobby Assistance",  "Personal Development",
    "Emotional Support",  "Travel Planning",   "Shopping Assistance",
    "Content Creation",   "Relationship Advice", "Family Assistance",
};

namespace {

bool valid_scenario(const std::string& name) {
  return std::find(kScenarioNames.begin(), kScenarioNames.end(), name) !=
         kScenarioNames.end();
}

std::optional<std::string> validate_record(const nlohmann::json& doc, PatRecord& out) {
  if (!doc.is_object()) return "line is not a JSON object";
  for (const char* field : {"persona", "scenario", "prompt", "completion", "persona_id"}) {
    if (!doc.contains(field) || !doc.at(field).is_string() ||
        doc.at(field).get<std::string>().empty()) {
      return std::string("missing or empty field: ") + field;
    }
  }
  if (!doc.contains("history") || !doc.at("history").is_array()) {
    return "missing history array";
  }
  out.persona_text = doc.at("persona").get<std::string>();
  out.scenario = doc.at("scenario").get<std::string>();
  if (!valid_scenario(out.scenario)) return "unknown scenario: " + out.scenario;
  out.query = doc.at("prompt").get<std::string>();
  out.completion = doc.at("completion").get<std::string>();
  out.persona_id = doc.at("persona_id").get<std::string>();
  for (const auto& pair : doc.at("history")) {
    if (!pair.is_array() || pair.size() != 2 || !pair.at(0).is_string() ||
        !pair.at(1).is_string()) {
      return "history entries must be [query, response] string pairs";
    }
    out.history.emplace_back(pair.at(0).get<std::string>(),
                             pair.at(1).get<std::string>());
  }
  return std::nullopt;
}

double jaccard_distance(const std::string& a, const std::string& b) {
  auto ta = tokenize(a);
  auto tb = tokenize(b);
  std::set<std::string> sa(ta.begin(), ta.end());
  std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& token : sa) {
    if (sb.count(token)) ++shared;
  }
  const std::size_t all = sa.size() + sb.size() - shared;
  return 1.0 - static_cast<double>(shared) / static_cast<double>(all);
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

}  // namespace

PatIngestResult ingest_pat(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot read dataset " + path.string());
  PatIngestResult result;
  std::string line;
  std::size_t line_no = 0;
  std::size_t considered = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++considered;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      result.rejects.push_back({line_no, e.what()});
      continue;
    }
    PatRecord record;
    if (auto reason = validate_record(doc, record)) {
      result.rejects.push_back({line_no, *reason});
    } else {
      result.records.push_back(std::move(record));
    }
  }
  if (considered > 0 &&
      static_cast<double>(result.rejects.size()) > 0.10 * static_cast<double>(considered)) {
    raise(ErrorCode::IngestAborted,
          std::to_string(result.rejects.size()) + " of " + std::to_string(considered) +
              " lines malformed (over the 10% ceiling)");
  }
  return result;
}

std::map<std::string, std::string> personas_by_id(const std::vector<PatRecord>& records) {
  std::map<std::string, std::string> personas;
  for (const auto& record : records) {
    personas.emplace(record.persona_id, record.persona_text);
  }
  return personas;
}

std::vector<std::string> persona_attribute_texts(const std::string& persona_text) {
  std::vector<std::string> attrs;
  std::string current;
  for (char c : persona_text) {
    if (c == '.' || c == ';' || c == '\n') {
      auto begin = current.find_first_not_of(" \t");
      if (begin != std::string::npos) attrs.push_back(current.substr(begin));
      current.clear();
    } else {
      current += c;
    }
  }
  auto begin = current.find_first_not_of(" \t");
  if (begin != std::string::npos) attrs.push_back(current.substr(begin));
  return attrs;
}

std::vector<InterleavedSequence> build_interleaved(const std::vector<PatRecord>& records,
                                                   std::size_t n_pairs,
                                                   std::size_t turns_per_user,
                                                   std::uint64_t seed,
                                                   double min_persona_distance) {
  if (n_pairs == 0 || turns_per_user == 0) {
    raise(ErrorCode::InvalidArgument, "build_interleaved: empty protocol");
  }
  std::map<std::string, std::vector<const PatRecord*>> by_persona;
  for (const auto& record : records) by_persona[record.persona_id].push_back(&record);

  std::vector<std::string> eligible;
  for (const auto& [id, recs] : by_persona) {
    if (recs.size() >= turns_per_user) eligible.push_back(id);
  }
  if (eligible.size() < 2 * n_pairs) {
    raise(ErrorCode::InsufficientData,
          "need " + std::to_string(2 * n_pairs) + " personas with >= " +
              std::to_string(turns_per_user) + " records, have " +
              std::to_string(eligible.size()));
  }
  std::sort(eligible.begin(), eligible.end());
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);

  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<bool> used(eligible.size(), false);
  for (std::size_t i = 0; i < eligible.size() && pairs.size() < n_pairs; ++i) {
    if (used[i]) continue;
    for (std::size_t j = i + 1; j < eligible.size(); ++j) {
      if (used[j]) continue;
      if (min_persona_distance > 0.0) {
        const double dist = jaccard_distance(by_persona[eligible[i]][0]->persona_text,
                                             by_persona[eligible[j]][0]->persona_text);
        if (dist < min_persona_distance) continue;
      }
      used[i] = used[j] = true;
      pairs.emplace_back(eligible[i], eligible[j]);
      break;
    }
  }
  if (pairs.size() < n_pairs) {
    raise(ErrorCode::InsufficientData,
          "only " + std::to_string(pairs.size()) + " pairs satisfy the distance filter");
  }

  std::vector<InterleavedSequence> sequences;
  sequences.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    InterleavedSequence seq;
    seq.user_a = a;
    seq.user_b = b;
    for (std::size_t t = 0; t < turns_per_user; ++t) {
      const PatRecord* ra = by_persona[a][t];
      const PatRecord* rb = by_persona[b][t];
      seq.turns.push_back({a, ra->query, ra->completion});
      seq.turns.push_back({b, rb->query, rb->completion});
    }
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

std::vector<SequenceTranscript> run_condition(
    const std::vector<InterleavedSequence>& sequences,
    const std::map<std::string, std::string>& personas, Condition condition,
    const RunOptions& options, const std::shared_ptr<ChatBackend>& backend,
    const std::shared_ptr<TextEmbedder>& embedder) {
  std::vector<SequenceTranscript> transcripts;
  transcripts.reserve(sequences.size());
  for (const auto& sequence : sequences) {
    EngineConfig config = options.engine;
    config.condition = condition;
    config.routing_enabled = condition != Condition::NoPersona;
    DialogueEngine engine(config, embedder, backend);

    // Cold start empties the onboarding profile in the adaptive condition only.
    const bool onboard =
        condition != Condition::NoPersona &&
        !(condition == Condition::AdaptivePersona && options.cold_start);
    std::map<std::string, EmbeddingVector> voices;
    std::size_t user_index = 0;
    for (const std::string& user : {sequence.user_a, sequence.user_b}) {
      if (onboard) {
        auto it = personas.find(user);
        if (it != personas.end()) {
          PersonaProfile profile;
          profile.user_id = user;
          profile.free_text = it->second;
          engine.set_onboarding_profile(user, std::move(profile));
        }
      }
      if (options.voice_mode && condition != Condition::NoPersona) {
        EmbeddingVector voice;
        voice.values.assign(8, 0.0);
        voice.values[user_index] = 1.0;
        engine.registry().enroll(user, {voice});
        voices[user] = std::move(voice);
      }
      ++user_index;
    }

    SequenceTranscript transcript;
    transcript.user_a = sequence.user_a;
    transcript.user_b = sequence.user_b;
    for (const auto& turn : sequence.turns) {
      TranscriptTurn out;
      out.true_speaker = turn.true_speaker;
      out.query = turn.query;
      out.ground_truth = turn.ground_truth;
      try {
        TurnResult result;
        if (options.voice_mode && condition != Condition::NoPersona) {
          result = engine.handle_turn(voices.at(turn.true_speaker), std::nullopt,
                                      turn.query);
        } else {
          result = engine.handle_turn(std::nullopt, turn.true_speaker, turn.query);
        }
        out.resolved_user = result.resolved_user;
        out.response = result.response;
        out.prompt_text = result.prompt_text;
      } catch (const Error& e) {
        // ScriptMiss / BackendUnavailable score as an empty response.
        out.error = std::string(error_code_name(e.code())) + ": " + e.what();
        out.resolved_user = condition == Condition::NoPersona ? kSharedUserId
                                                              : turn.true_speaker;
      }
      transcript.turns.push_back(std::move(out));
    }
    transcripts.push_back(std::move(transcript));
  }
  return transcripts;
}

ConditionMetrics evaluate_condition(const std::vector<SequenceTranscript>& transcripts,
                                    const std::map<std::string, std::string>& personas,
                                    TextEmbedder& embedder, const IdfTable& idf) {
  ConditionMetrics metrics;
  std::vector<AttributionRecord> records;
  std::vector<std::string> all_responses;
  std::map<std::string, std::vector<std::string>> responses_by_user;
  double semantic_sum = 0.0;
  double a_cover_sum = 0.0;
  double bleu_sum[4] = {0, 0, 0, 0};
  double rouge_sum[3] = {0, 0, 0};
  std::size_t n_turns = 0;

  for (const auto& transcript : transcripts) {
    for (const auto& turn : transcript.turns) {
      ++n_turns;
      const std::string& correct_id = turn.true_speaker;
      const std::string partner_id =
          turn.true_speaker == transcript.user_a ? transcript.user_b : transcript.user_a;
      const std::string& persona_correct = personas.at(correct_id);
      const std::string& persona_wrong = personas.at(partner_id);

      AttributionRecord record;
      record.response = turn.response;
      record.ground_truth = turn.ground_truth;
      record.persona_correct = persona_correct;
      record.persona_wrong = persona_wrong;
      if (turn.response.empty()) {
        ++metrics.n_failures;  // lifts stay 0; the strict rule scores it wrong
      } else {
        record.lift_correct =
            persona_lift(turn.response, turn.ground_truth, persona_correct, embedder);
        record.lift_wrong =
            persona_lift(turn.response, turn.ground_truth, persona_wrong, embedder);
        semantic_sum += semantic_a_cover(
            turn.response, persona_attribute_texts(persona_correct), embedder);
        a_cover_sum +=
            a_cover(turn.response, persona_attribute_texts(persona_correct), idf);
      }
      records.push_back(std::move(record));

      for (int n = 1; n <= 4; ++n) {
        bleu_sum[n - 1] += bleu_n(turn.response, turn.ground_truth, n);
      }
      rouge_sum[0] += rouge(turn.response, turn.ground_truth, RougeVariant::Rouge1);
      rouge_sum[1] += rouge(turn.response, turn.ground_truth, RougeVariant::Rouge2);
      rouge_sum[2] += rouge(turn.response, turn.ground_truth, RougeVariant::RougeL);

      all_responses.push_back(turn.response);
      responses_by_user[correct_id].push_back(turn.response);
    }
  }
  if (records.empty()) raise(ErrorCode::UndefinedMetric, "no turns to evaluate");

  metrics.paa = paa(records);
  metrics.margin = persona_margin(records);
  metrics.semantic_a_cover = semantic_sum / static_cast<double>(n_turns);
  metrics.a_cover = a_cover_sum / static_cast<double>(n_turns);
  for (int i = 0; i < 4; ++i) metrics.bleu[i] = bleu_sum[i] / static_cast<double>(n_turns);
  for (int i = 0; i < 3; ++i) {
    metrics.rouge[i] = rouge_sum[i] / static_cast<double>(n_turns);
  }
  metrics.distinct1 = distinct_1(all_responses);

  double p_cover_sum = 0.0;
  std::size_t p_cover_users = 0;
  for (const auto& [user, responses] : responses_by_user) {
    auto it = personas.find(user);
    if (it == personas.end()) continue;
    p_cover_sum += p_cover(responses, it->second, idf);
    ++p_cover_users;
  }
  metrics.p_cover = p_cover_users ? p_cover_sum / static_cast<double>(p_cover_users) : 0.0;
  return metrics;
}

std::size_t audit_isolation(const std::vector<SequenceTranscript>& transcripts,
                            const std::vector<PatRecord>& records) {
  // Tokens seen for each persona across its persona text, queries, and
  // completions; a token owned by exactly one persona is its marker.
  std::map<std::string, std::set<std::string>> tokens_by_persona;
  std::map<std::string, std::set<std::string>> owners;
  for (const auto& record : records) {
    auto& mine = tokens_by_persona[record.persona_id];
    for (const std::string* text :
         {&record.persona_text, &record.query, &record.completion}) {
      for (auto& token : tokenize(*text)) mine.insert(std::move(token));
    }
  }
  for (const auto& [id, tokens] : tokens_by_persona) {
    for (const auto& token : tokens) owners[token].insert(id);
  }
  auto exclusive = [&](const std::string& id) {
    std::set<std::string> out;
    for (const auto& token : tokens_by_persona.at(id)) {
      if (owners.at(token).size() == 1) out.insert(token);
    }
    return out;
  };

  std::size_t violations = 0;
  for (const auto& transcript : transcripts) {
    const std::set<std::string> markers_a = exclusive(transcript.user_a);
    const std::set<std::string> markers_b = exclusive(transcript.user_b);
    for (const auto& turn : transcript.turns) {
      const bool a_speaks = turn.true_speaker == transcript.user_a;
      const std::set<std::string>& forbidden = a_speaks ? markers_b : markers_a;
      for (const auto& token : tokenize(turn.prompt_text)) {
        if (forbidden.count(token)) {
          ++violations;
          break;
        }
      }
    }
  }
  return violations;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& [name, m] : conditions) {
    conds.push_back({{"condition", name},
                     {"paa", m.paa},
                     {"margin", m.margin},
                     {"semantic_a_cover", m.semantic_a_cover},
                     {"bleu", {m.bleu[0], m.bleu[1], m.bleu[2], m.bleu[3]}},
                     {"rouge", {m.rouge[0], m.rouge[1], m.rouge[2]}},
                     {"distinct_1", m.distinct1},
                     {"p_cover", m.p_cover},
                     {"a_cover", m.a_cover},
                     {"n_failures", m.n_failures}});
  }
  return {{"metadata",
           {{"n_turns", n_turns},
            {"n_pairs", n_pairs},
            {"turns_per_user", turns_per_user},
            {"seed", seed},
            {"cold_start", cold_start},
            {"config_digest", config_digest}}},
          {"conditions", std::move(conds)}};
}

EvalReport EvalReport::from_json(const nlohmann::json& doc) {
  EvalReport report;
  const auto& meta = doc.at("metadata");
  report.n_turns = meta.at("n_turns").get<std::size_t>();
  report.n_pairs = meta.at("n_pairs").get<std::size_t>();
  report.turns_per_user = meta.at("turns_per_user").get<std::size_t>();
  report.seed = meta.at("seed").get<std::uint64_t>();
  report.cold_start = meta.value("cold_start", false);
  report.config_digest = meta.at("config_digest").get<std::string>();
  for (const auto& c : doc.at("conditions")) {
    ConditionMetrics m;
    m.paa = c.at("paa").get<double>();
    m.margin = c.at("margin").get<double>();
    m.semantic_a_cover = c.at("semantic_a_cover").get<double>();
    for (int i = 0; i < 4; ++i) m.bleu[i] = c.at("bleu").at(i).get<double>();
    for (int i = 0; i < 3; ++i) m.rouge[i] = c.at("rouge").at(i).get<double>();
    m.distinct1 = c.at("distinct_1").get<double>();
    m.p_cover = c.at("p_cover").get<double>();
    m.a_cover = c.at("a_cover").get<double>();
    m.n_failures = c.at("n_failures").get<std::size_t>();
    report.conditions.emplace_back(c.at("condition").get<std::string>(), m);
  }
  return report;
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) return report.to_json().dump(2) + "\n";
  if (format == ReportFormat::Csv) {
    std::string out =
        "Setting,PAA,Margin,S-ACov,BL-1,BL-2,BL-3,BL-4,RG-1,RG-2,RG-L,Dist-1,"
        "P-Cover,A-Cover,Failures\r\n";
    for (const auto& [name, m] : report.conditions) {
      out += name;
      for (double v : {m.paa, m.margin, m.semantic_a_cover, m.bleu[0], m.bleu[1],
                       m.bleu[2], m.bleu[3], m.rouge[0], m.rouge[1], m.rouge[2],
                       m.distinct1, m.p_cover, m.a_cover}) {
        out += ',' + format_double(v);
      }
      out += ',' + std::to_string(m.n_failures);
      out += "\r\n";
    }
    return out;
  }
  std::ostringstream out;
  out << "Multi-user interleaved evaluation (" << report.n_turns << " turns, "
      << report.n_pairs << " pairs, seed " << report.seed << ")\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %10s %10s %10s %10s %10s\n", "Setting",
                "PAA", "Margin", "S-ACov", "BL-1", "RG-1");
  out << line;
  for (const auto& [name, m] : report.conditions) {
    std::snprintf(line, sizeof line, "%-12s %10.6f %+10.6f %10.6f %10.6f %10.6f\n",
                  name.c_str(), m.paa, m.margin, m.semantic_a_cover, m.bleu[0],
                  m.rouge[0]);
    out << line;
  }
  return out.str();
}

EvalReport run_evaluation(const EvalRunConfig& config) {
  PatIngestResult ingested = ingest_pat(config.dataset);
  const auto personas = personas_by_id(ingested.records);
  const auto sequences = build_interleaved(ingested.records, config.n_pairs,
                                           config.turns_per_user, config.seed,
                                           config.min_persona_distance);

  auto embedder = std::make_shared<HashedBagEmbedder>(config.embedder_dim);

  std::shared_ptr<ChatBackend> backend;
  if (config.backend_kind == "persona_injecting") {
    std::map<std::string, std::string> script;
    std::vector<std::string> corpus;
    for (const auto& record : ingested.records) {
      script[record.query] = record.completion;
      corpus.push_back(record.completion);
      corpus.push_back(record.query);
    }
    for (const auto& [id, text] : personas) corpus.push_back(text);
    backend = std::make_shared<PersonaInjectingBackend>(std::move(script), corpus);
  } else if (config.backend_kind == "echo") {
    backend = std::make_shared<EchoBackend>();
  } else if (config.backend_kind == "scripted") {
    backend = std::make_shared<ScriptedBackend>(
        ScriptedBackend::from_jsonl(config.script_path));
  } else if (config.backend_kind == "http") {
    backend = std::make_shared<HttpBackend>(config.http);
  } else {
    raise(ErrorCode::InvalidArgument, "unknown backend kind: " + config.backend_kind);
  }

  // Ground-truth responses are the IDF corpus for the coverage metrics.
  std::vector<std::string> gt_docs;
  for (const auto& sequence : sequences) {
    for (const auto& turn : sequence.turns) gt_docs.push_back(turn.ground_truth);
  }
  const IdfTable idf = IdfTable::build(gt_docs);

  EvalReport report;
  report.n_pairs = config.n_pairs;
  report.turns_per_user = config.turns_per_user;
  report.n_turns = config.n_pairs * 2 * config.turns_per_user;
  report.seed = config.seed;
  report.cold_start = config.cold_start;
  {
    nlohmann::json digest_doc = {
        {"pairs", config.n_pairs},
        {"turns_per_user", config.turns_per_user},
        {"seed", config.seed},
        {"cold_start", config.cold_start},
        {"voice_mode", config.voice_mode},
        {"backend", config.backend_kind},
        {"embedder_dim", config.embedder_dim},
        {"retrieval_k", config.engine.retrieval_k},
        {"window_size", config.engine.window_size},
        {"token_budget", config.engine.token_budget},
    };
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(digest_doc.dump())));
    report.config_digest = digest;
  }

  RunOptions options;
  options.engine = config.engine;
  options.cold_start = config.cold_start;
  options.voice_mode = config.voice_mode;
  for (Condition condition : config.conditions) {
    auto transcripts =
        run_condition(sequences, personas, condition, options, backend, embedder);
    report.conditions.emplace_back(condition_name(condition),
                                   evaluate_condition(transcripts, personas, *embedder, idf));
  }
  return report;
}

}  // namespace afa
