// Evaluation harness: PAT-format ingestion, interleaved two-user sequence
// construction, three-condition execution, metric aggregation, and report
// rendering.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "afa/backend.hpp"
#include "afa/engine.hpp"
#include "afa/metrics.hpp"

namespace afa {

extern const std::vector<std::string> kScenarioNames;  // the fixed 12

struct PatRecord {
  std::string persona_text;
  std::string scenario;
  std::vector<std::pair<std::string, std::string>> history;  // prior (q, r)
  std::string query;
  std::string completion;
  std::string persona_id;
};

struct PatReject {
  std::size_t line_no = 0;
  std::string reason;
};

struct PatIngestResult {
  std::vector<PatRecord> records;
  std::vector<PatReject> rejects;
};

// Validated records plus a rejects report; malformed lines are never silently
// dropped. Throws IoError on an unreadable file and IngestAborted when more
// than 10% of non-empty lines are malformed.
PatIngestResult ingest_pat(const std::filesystem::path& path);

// persona_id -> persona text for every distinct persona in the records.
std::map<std::string, std::string> personas_by_id(const std::vector<PatRecord>& records);

// Persona text split into sentence-level attribute strings.
std::vector<std::string> persona_attribute_texts(const std::string& persona_text);

struct InterleavedTurn {
  std::string true_speaker;
  std::string query;
  std::string ground_truth;
};

struct InterleavedSequence {
  std::string user_a;
  std::string user_b;
  std::vector<InterleavedTurn> turns;  // strict alternation starting with user_a
};

// Deterministic given seed; pairs drawn without replacement, per-user turns in
// source order. min_persona_distance (token Jaccard distance) optionally
// filters near-duplicate pairings. Throws InsufficientData.
std::vector<InterleavedSequence> build_interleaved(const std::vector<PatRecord>& records,
                                                   std::size_t n_pairs,
                                                   std::size_t turns_per_user,
                                                   std::uint64_t seed,
                                                   double min_persona_distance = 0.0);

struct TranscriptTurn {
  std::string true_speaker;
  std::string resolved_user;
  std::string query;
  std::string ground_truth;
  std::string response;  // empty when the backend failed for this turn
  std::string prompt_text;
  std::optional<std::string> error;
};

struct SequenceTranscript {
  std::string user_a;
  std::string user_b;
  std::vector<TranscriptTurn> turns;
};

struct RunOptions {
  EngineConfig engine;
  bool cold_start = false;  // adaptive only: skip onboarding profiles
  bool voice_mode = false;  // resolve identities through synthetic voice probes
};

// Executes one condition over the sequences with a fresh engine per sequence.
// Backend and embedder failures are recorded per turn; the run continues.
std::vector<SequenceTranscript> run_condition(
    const std::vector<InterleavedSequence>& sequences,
    const std::map<std::string, std::string>& personas, Condition condition,
    const RunOptions& options, const std::shared_ptr<ChatBackend>& backend,
    const std::shared_ptr<TextEmbedder>& embedder);

struct ConditionMetrics {
  double paa = 0.0;
  double margin = 0.0;
  double semantic_a_cover = 0.0;
  double bleu[4] = {0.0, 0.0, 0.0, 0.0};
  double rouge[3] = {0.0, 0.0, 0.0};
  double distinct1 = 0.0;
  double p_cover = 0.0;
  double a_cover = 0.0;
  std::size_t n_failures = 0;
};

ConditionMetrics evaluate_condition(const std::vector<SequenceTranscript>& transcripts,
                                    const std::map<std::string, std::string>& personas,
                                    TextEmbedder& embedder, const IdfTable& idf);

struct EvalReport {
  std::vector<std::pair<std::string, ConditionMetrics>> conditions;  // run order
  std::size_t n_turns = 0;
  std::size_t n_pairs = 0;
  std::size_t turns_per_user = 0;
  std::uint64_t seed = 0;
  bool cold_start = false;
  std::string config_digest;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& doc);
};

enum class ReportFormat { Text, Json, Csv };

std::string render_report(const EvalReport& report, ReportFormat format);

struct EvalRunConfig {
  std::filesystem::path dataset;
  std::size_t n_pairs = 15;
  std::size_t turns_per_user = 10;
  std::uint64_t seed = 0;
  std::vector<Condition> conditions = {Condition::NoPersona, Condition::ConstantPersona,
                                       Condition::AdaptivePersona};
  bool cold_start = false;
  bool voice_mode = false;
  double min_persona_distance = 0.0;
  std::string backend_kind = "persona_injecting";  // echo | scripted | http
  std::string script_path;                          // scripted backend
  HttpBackendConfig http;                           // http backend
  std::size_t embedder_dim = 256;
  EngineConfig engine;
};

// Full protocol: ingest, build sequences, run every condition, evaluate.
EvalReport run_evaluation(const EvalRunConfig& config);

// Number of routed prompts containing tokens exclusive to the non-speaking
// user of the pair. A token counts as exclusive to a persona when it appears
// in that persona's text or records and in no other persona's. Zero means
// isolation holds.
std::size_t audit_isolation(const std::vector<SequenceTranscript>& transcripts,
                            const std::vector<PatRecord>& records);

}  // namespace afa
