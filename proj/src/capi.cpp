// extern-C surface over the C++ core: opaque handles, status codes, and a
// thread-local last-error message.
#include "afa.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "json.hpp"

#include "afa/engine.hpp"
#include "afa/error.hpp"
#include "afa/eval.hpp"
#include "afa/fixture.hpp"
#include "afa/llm_adapters.hpp"
#include "afa/speaker_registry.hpp"

namespace {

thread_local std::string g_last_error;

afa_status status_from_code(afa::ErrorCode code) {
  using afa::ErrorCode;
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::CorruptStore:
      return AFA_STATUS_IO;
    case ErrorCode::DuplicateEnrollment:
    case ErrorCode::OutOfOrderTurn:
    case ErrorCode::RolloverFailed:
      return AFA_STATUS_STATE;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::EmbedUnavailable:
    case ErrorCode::ScriptMiss:
    case ErrorCode::ExtractionFailed:
      return AFA_STATUS_BACKEND;
    case ErrorCode::DimMismatch:
    case ErrorCode::DegenerateVector:
    case ErrorCode::InsufficientSamples:
    case ErrorCode::InsufficientData:
    case ErrorCode::IngestAborted:
    case ErrorCode::UndefinedCoverage:
    case ErrorCode::UndefinedMetric:
      return AFA_STATUS_DATA;
    case ErrorCode::InvalidArgument:
      return AFA_STATUS_INVALID;
    case ErrorCode::None:
      return AFA_OK;
  }
  return AFA_STATUS_INTERNAL;
}

template <typename Fn>
afa_status guarded(Fn&& fn) {
  try {
    fn();
    return AFA_OK;
  } catch (const afa::Error& e) {
    g_last_error = e.what();
    return status_from_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AFA_STATUS_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return AFA_STATUS_INTERNAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

afa_status require(bool condition, const char* message) {
  if (condition) return AFA_OK;
  g_last_error = message;
  return AFA_STATUS_INVALID;
}

}  // namespace

struct afa_registry_s {
  afa::SpeakerRegistry registry;
};

struct afa_engine_s {
  afa::EngineConfig config;
  std::shared_ptr<afa::TextEmbedder> embedder;
  std::shared_ptr<afa::ChatBackend> backend;
  std::unique_ptr<afa::DialogueEngine> engine;
  std::string state_dir;
};

extern "C" {

const char* afa_version(void) { return "0.1.0"; }

const char* afa_last_error(void) { return g_last_error.c_str(); }

void afa_string_free(char* s) { std::free(s); }

afa_status afa_registry_create(const char* new_id_prefix, afa_registry** out) {
  if (auto rc = require(out != nullptr, "out must not be null")) return rc;
  return guarded([&] {
    *out = new afa_registry_s{
        afa::SpeakerRegistry(new_id_prefix ? new_id_prefix : "user-")};
  });
}

afa_status afa_registry_open(const char* path, const char* new_id_prefix,
                             afa_registry** out) {
  if (auto rc = require(out && path, "path and out must not be null")) return rc;
  return guarded([&] {
    *out = new afa_registry_s{
        afa::SpeakerRegistry::load(path, new_id_prefix ? new_id_prefix : "user-")};
  });
}

afa_status afa_registry_save(const afa_registry* registry, const char* path) {
  if (auto rc = require(registry && path, "registry and path must not be null")) {
    return rc;
  }
  return guarded([&] { registry->registry.save(path); });
}

void afa_registry_free(afa_registry* registry) { delete registry; }

afa_status afa_registry_enroll(afa_registry* registry, const char* user_id,
                               const double* vectors, size_t n_vectors, size_t dim) {
  if (auto rc = require(registry && user_id && vectors && n_vectors > 0 && dim > 0,
                        "enroll needs a registry, user id, and vectors")) {
    return rc;
  }
  return guarded([&] {
    std::vector<afa::EmbeddingVector> embeddings;
    embeddings.reserve(n_vectors);
    for (size_t i = 0; i < n_vectors; ++i) {
      embeddings.emplace_back(
          std::vector<double>(vectors + i * dim, vectors + (i + 1) * dim));
    }
    registry->registry.enroll(user_id, std::move(embeddings));
  });
}

afa_status afa_registry_enroll_jsonl(afa_registry* registry, const char* path,
                                     const char* user_filter) {
  if (auto rc = require(registry && path, "registry and path must not be null")) {
    return rc;
  }
  return guarded([&] {
    auto grouped = afa::read_embeddings_jsonl(path);
    bool any = false;
    for (auto& [speaker, embeddings] : grouped) {
      if (user_filter && speaker != user_filter) continue;
      registry->registry.enroll(speaker, std::move(embeddings));
      any = true;
    }
    if (!any) {
      afa::raise(afa::ErrorCode::InsufficientData,
                 std::string("no embeddings found") +
                     (user_filter ? std::string(" for speaker ") + user_filter : ""));
    }
  });
}

afa_status afa_registry_identify(afa_registry* registry, const double* probe,
                                 size_t dim, double threshold, afa_identity* out) {
  if (auto rc = require(registry && probe && dim > 0 && out,
                        "identify needs a registry, probe, and out")) {
    return rc;
  }
  return guarded([&] {
    afa::EmbeddingVector embedding{std::vector<double>(probe, probe + dim)};
    afa::IdentityResolution res = registry->registry.identify(embedding, threshold);
    std::snprintf(out->user_id, sizeof out->user_id, "%s", res.user_id.c_str());
    out->similarity = res.similarity;
    out->threshold_used = res.threshold_used;
    out->is_new_speaker = res.outcome == afa::IdentityOutcome::NewSpeaker ? 1 : 0;
  });
}

size_t afa_registry_size(const afa_registry* registry) {
  return registry ? registry->registry.size() : 0;
}

size_t afa_registry_dim(const afa_registry* registry) {
  return registry ? registry->registry.dim() : 0;
}

afa_status afa_registry_centroid(const afa_registry* registry, const char* user_id,
                                 double* out, size_t cap, size_t* dim_out) {
  if (auto rc = require(registry && user_id && dim_out,
                        "registry, user_id, and dim_out are required")) {
    return rc;
  }
  return guarded([&] {
    auto entry = registry->registry.enrollment(user_id);
    if (!entry) {
      afa::raise(afa::ErrorCode::InsufficientData,
                 std::string("no enrollment for ") + user_id);
    }
    *dim_out = entry->centroid.dim();
    if (out) {
      const size_t n = std::min(cap, entry->centroid.dim());
      std::memcpy(out, entry->centroid.values.data(), n * sizeof(double));
    }
  });
}

afa_status afa_validate_speakers(size_t n_speakers, size_t enroll_n, size_t test_n,
                                 double noise_scale, size_t dim, double threshold,
                                 uint64_t seed, double* accuracy_out,
                                 double* mean_similarity_out, size_t* decisions_out) {
  if (auto rc = require(accuracy_out && mean_similarity_out,
                        "accuracy and mean similarity outputs are required")) {
    return rc;
  }
  return guarded([&] {
    auto speakers =
        afa::make_synthetic_speakers(n_speakers, enroll_n + test_n, dim, noise_scale, seed);
    auto result = afa::validate_identification(speakers, enroll_n, test_n, threshold);
    *accuracy_out = result.accuracy;
    *mean_similarity_out = result.mean_similarity;
    if (decisions_out) *decisions_out = result.decisions;
  });
}

}  // extern "C"

namespace {

std::shared_ptr<afa::TextEmbedder> embedder_from_json(const nlohmann::json& config) {
  const std::string kind = config.value("kind", "fallback");
  if (kind == "fallback") {
    return std::make_shared<afa::HashedBagEmbedder>(
        config.value("dim", std::size_t{256}));
  }
  if (kind == "remote") {
    afa::RemoteEmbedderConfig remote;
    remote.url = config.value("url", "");
    remote.model = config.value("model", "");
    remote.api_key_env = config.value("api_key_env", "AFA_API_KEY");
    remote.dim = config.value("dim", std::size_t{0});
    if (remote.url.empty()) {
      afa::raise(afa::ErrorCode::InvalidArgument, "remote embedder needs a url");
    }
    return std::make_shared<afa::RemoteEmbedder>(remote);
  }
  afa::raise(afa::ErrorCode::InvalidArgument, "unknown embedder kind: " + kind);
}

std::shared_ptr<afa::ChatBackend> backend_from_json(const nlohmann::json& config) {
  const std::string kind = config.value("kind", "echo");
  if (kind == "echo") return std::make_shared<afa::EchoBackend>();
  if (kind == "scripted") {
    const std::string script = config.value("script", "");
    if (script.empty()) {
      afa::raise(afa::ErrorCode::InvalidArgument, "scripted backend needs a script path");
    }
    const std::string mode = config.value("key_mode", "exact");
    return std::make_shared<afa::ScriptedBackend>(afa::ScriptedBackend::from_jsonl(
        script, mode == "persona_digest" ? afa::ScriptKeyMode::QueryPlusPersonaDigest
                                         : afa::ScriptKeyMode::ExactQuery));
  }
  if (kind == "http") {
    afa::HttpBackendConfig http;
    http.url = config.value("url", "");
    http.model = config.value("model", "");
    http.api_key_env = config.value("api_key_env", "AFA_API_KEY");
    http.max_retries = config.value("max_retries", 3);
    http.initial_delay_ms = config.value("initial_delay_ms", 200);
    if (http.url.empty()) {
      afa::raise(afa::ErrorCode::InvalidArgument, "http backend needs a url");
    }
    return std::make_shared<afa::HttpBackend>(http);
  }
  afa::raise(afa::ErrorCode::InvalidArgument,
             "unknown backend kind for chat: " + kind);
}

}  // namespace

extern "C" {

afa_status afa_engine_create(const char* config_json, afa_engine** out) {
  if (auto rc = require(out != nullptr, "out must not be null")) return rc;
  return guarded([&] {
    nlohmann::json doc = nlohmann::json::object();
    if (config_json && *config_json) {
      doc = nlohmann::json::parse(config_json);
    }
    afa::EngineConfig config;
    if (doc.contains("condition")) {
      auto condition = afa::condition_from_name(doc.at("condition").get<std::string>());
      if (!condition) {
        afa::raise(afa::ErrorCode::InvalidArgument,
                   "unknown condition: " + doc.at("condition").get<std::string>());
      }
      config.condition = *condition;
    }
    config.speaker_threshold = doc.value("speaker_threshold", 0.70);
    config.routing_enabled = doc.value("routing_enabled", true);
    config.retrieval_k = doc.value("retrieval_k", std::size_t{3});
    config.window_size = doc.value("window_size", std::size_t{10});
    config.token_budget = doc.value("token_budget", std::size_t{3000});
    config.temperature = doc.value("temperature", 0.0);
    config.model_name = doc.value("model", std::string("default"));
    config.new_speaker_prefix = doc.value("new_speaker_prefix", std::string("user-"));

    auto handle = std::make_unique<afa_engine_s>();
    handle->config = config;
    handle->embedder = embedder_from_json(doc.value("embedder", nlohmann::json::object()));
    handle->backend = backend_from_json(doc.value("backend", nlohmann::json::object()));
    afa::Summarizer summarizer;  // default: deterministic fallback
    if (auto s = doc.value("summarizer", nlohmann::json::object());
        s.value("kind", "fallback") == std::string("llm")) {
      summarizer = afa::make_llm_summarizer(
          handle->backend, s.value("instruction", afa::kDefaultSummarizerInstruction),
          config.model_name);
    }
    afa::AttributeExtractor extractor;  // default: rule-based fallback
    if (auto x = doc.value("extractor", nlohmann::json::object());
        x.value("kind", "fallback") == std::string("llm")) {
      extractor = afa::make_llm_extractor(
          handle->backend, x.value("instruction", afa::kDefaultExtractorInstruction),
          config.model_name);
    }
    handle->engine = std::make_unique<afa::DialogueEngine>(
        config, handle->embedder, handle->backend, std::move(summarizer),
        std::move(extractor));
    handle->state_dir = doc.value("state_dir", std::string());
    if (!handle->state_dir.empty() &&
        std::filesystem::is_directory(handle->state_dir)) {
      handle->engine->load_state(handle->state_dir);
    }
    *out = handle.release();
  });
}

void afa_engine_free(afa_engine* engine) { delete engine; }

afa_status afa_engine_turn(afa_engine* engine, const char* user_id,
                           const double* voice, size_t voice_dim, const char* query,
                           char** response_out, char** resolved_user_out) {
  if (auto rc = require(engine && query && response_out,
                        "engine, query, and response output are required")) {
    return rc;
  }
  return guarded([&] {
    std::optional<std::string> user;
    if (user_id && *user_id) user = user_id;
    std::optional<afa::EmbeddingVector> embedding;
    if (voice && voice_dim > 0) {
      embedding = afa::EmbeddingVector{std::vector<double>(voice, voice + voice_dim)};
    }
    afa::TurnResult result = engine->engine->handle_turn(embedding, user, query);
    *response_out = copy_string(result.response);
    if (resolved_user_out) *resolved_user_out = copy_string(result.resolved_user);
  });
}

afa_status afa_engine_save(afa_engine* engine) {
  if (auto rc = require(engine != nullptr, "engine must not be null")) return rc;
  return guarded([&] {
    if (engine->state_dir.empty()) {
      afa::raise(afa::ErrorCode::InvalidArgument, "engine has no state_dir configured");
    }
    engine->engine->save_state(engine->state_dir);
  });
}

afa_status afa_ingest_pat(const char* path, char** summary_json_out) {
  if (auto rc = require(path && summary_json_out, "path and summary output required")) {
    return rc;
  }
  return guarded([&] {
    afa::PatIngestResult result = afa::ingest_pat(path);
    nlohmann::json rejects = nlohmann::json::array();
    for (const auto& reject : result.rejects) {
      rejects.push_back({{"line", reject.line_no}, {"reason", reject.reason}});
    }
    nlohmann::json summary = {{"records", result.records.size()},
                              {"rejects", std::move(rejects)}};
    *summary_json_out = copy_string(summary.dump(2));
  });
}

afa_status afa_fixture_write(const char* path, size_t n_personas,
                             size_t scenarios_per_persona, size_t turns_per_scenario) {
  if (auto rc = require(path != nullptr, "path must not be null")) return rc;
  return guarded([&] {
    afa::FixtureSpec spec;
    if (n_personas) spec.n_personas = n_personas;
    if (scenarios_per_persona) spec.scenarios_per_persona = scenarios_per_persona;
    if (turns_per_scenario) spec.turns_per_scenario = turns_per_scenario;
    afa::write_fixture_jsonl(path, spec);
  });
}

afa_status afa_eval_run(const char* options_json, char** report_json_out) {
  if (auto rc = require(options_json && report_json_out,
                        "options and report output required")) {
    return rc;
  }
  return guarded([&] {
    nlohmann::json doc = nlohmann::json::parse(options_json);
    afa::EvalRunConfig config;
    config.dataset = doc.at("dataset").get<std::string>();
    config.n_pairs = doc.value("pairs", std::size_t{15});
    config.turns_per_user = doc.value("turns_per_user", std::size_t{10});
    config.seed = doc.value("seed", std::uint64_t{0});
    config.cold_start = doc.value("cold_start", false);
    config.voice_mode = doc.value("voice_mode", false);
    config.min_persona_distance = doc.value("min_persona_distance", 0.0);
    config.backend_kind = doc.value("backend", std::string("persona_injecting"));
    config.script_path = doc.value("script", std::string());
    config.http.url = doc.value("url", std::string());
    config.http.model = doc.value("model", std::string());
    config.http.api_key_env = doc.value("api_key_env", std::string("AFA_API_KEY"));
    config.embedder_dim = doc.value("embedder_dim", std::size_t{256});
    config.engine.retrieval_k = doc.value("retrieval_k", std::size_t{3});
    config.engine.window_size = doc.value("window_size", std::size_t{10});
    config.engine.token_budget = doc.value("token_budget", std::size_t{3000});
    if (doc.contains("conditions")) {
      config.conditions.clear();
      for (const auto& name : doc.at("conditions")) {
        auto condition = afa::condition_from_name(name.get<std::string>());
        if (!condition) {
          afa::raise(afa::ErrorCode::InvalidArgument,
                     "unknown condition: " + name.get<std::string>());
        }
        config.conditions.push_back(*condition);
      }
    }
    afa::EvalReport report = afa::run_evaluation(config);
    *report_json_out = copy_string(report.to_json().dump(2) + "\n");
  });
}

afa_status afa_report_render(const char* report_json, const char* format,
                             char** rendered_out) {
  if (auto rc = require(report_json && format && rendered_out,
                        "report, format, and output required")) {
    return rc;
  }
  return guarded([&] {
    afa::ReportFormat fmt;
    const std::string name = format;
    if (name == "text") {
      fmt = afa::ReportFormat::Text;
    } else if (name == "json") {
      fmt = afa::ReportFormat::Json;
    } else if (name == "csv") {
      fmt = afa::ReportFormat::Csv;
    } else {
      afa::raise(afa::ErrorCode::InvalidArgument, "unknown report format: " + name);
    }
    afa::EvalReport report;
    try {
      report = afa::EvalReport::from_json(nlohmann::json::parse(report_json));
    } catch (const afa::Error&) {
      throw;
    } catch (const std::exception& e) {
      afa::raise(afa::ErrorCode::CorruptStore,
                 std::string("report JSON malformed: ") + e.what());
    }
    *rendered_out = copy_string(afa::render_report(report, fmt));
  });
}

}  // extern "C"
