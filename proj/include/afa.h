/*
 * C API for the afa engine: multi-user dialogue memory with voice-embedding
 * identity routing and the interleaved evaluation harness.
 *
 * All functions return afa_status; AFA_OK is 0. On failure, afa_last_error()
 * returns a thread-local message describing the most recent error. Strings
 * returned through char** out-parameters are heap-allocated and must be
 * released with afa_string_free().
 */
#ifndef AFA_H
#define AFA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum afa_status {
  AFA_OK = 0,
  AFA_STATUS_IO = 1,      /* unreadable/unwritable files, corrupt stores */
  AFA_STATUS_STATE = 2,   /* conflicts: duplicate enrollment, out-of-order turns */
  AFA_STATUS_BACKEND = 3, /* chat/embedding providers unavailable or missing keys */
  AFA_STATUS_DATA = 4,    /* bad inputs: dim mismatches, insufficient data */
  AFA_STATUS_INVALID = 5, /* invalid arguments or configuration */
  AFA_STATUS_INTERNAL = 6
} afa_status;

const char* afa_version(void);
const char* afa_last_error(void);
void afa_string_free(char* s);

/* ---- speaker registry ------------------------------------------------- */

typedef struct afa_registry_s afa_registry;

afa_status afa_registry_create(const char* new_id_prefix, afa_registry** out);
afa_status afa_registry_open(const char* path, const char* new_id_prefix,
                             afa_registry** out);
afa_status afa_registry_save(const afa_registry* registry, const char* path);
void afa_registry_free(afa_registry* registry);

/* vectors: n_vectors rows of dim doubles, row-major */
afa_status afa_registry_enroll(afa_registry* registry, const char* user_id,
                               const double* vectors, size_t n_vectors, size_t dim);

/* Enrolls every speaker found in a {"speaker","embedding"} JSONL file whose
 * name matches user_filter (NULL: all speakers in the file). */
afa_status afa_registry_enroll_jsonl(afa_registry* registry, const char* path,
                                     const char* user_filter);

typedef struct afa_identity {
  char user_id[128];
  double similarity;
  double threshold_used;
  int is_new_speaker; /* 1 when a fresh id was minted and registered */
} afa_identity;

afa_status afa_registry_identify(afa_registry* registry, const double* probe,
                                 size_t dim, double threshold, afa_identity* out);

size_t afa_registry_size(const afa_registry* registry);
size_t afa_registry_dim(const afa_registry* registry);

/* Copies a speaker's centroid into out (capacity cap doubles); *dim_out gets
 * the full dimensionality. Fails with AFA_STATUS_DATA for unknown speakers. */
afa_status afa_registry_centroid(const afa_registry* registry, const char* user_id,
                                 double* out, size_t cap, size_t* dim_out);

/* Synthetic speaker-identification validation: n_speakers unit base vectors
 * plus isotropic noise, enroll_n enrollment and test_n held-out samples each. */
afa_status afa_validate_speakers(size_t n_speakers, size_t enroll_n, size_t test_n,
                                 double noise_scale, size_t dim, double threshold,
                                 uint64_t seed, double* accuracy_out,
                                 double* mean_similarity_out, size_t* decisions_out);

/* ---- dialogue engine --------------------------------------------------- */

typedef struct afa_engine_s afa_engine;

/*
 * config_json keys (all optional):
 *   condition: "no-persona" | "constant" | "adaptive"   (default "adaptive")
 *   speaker_threshold, retrieval_k, window_size, token_budget, temperature
 *   model, new_speaker_prefix
 *   backend: {kind: "echo"|"scripted"|"http", url, model, api_key_env, script}
 *   embedder: {kind: "fallback"|"remote", dim, url, model, api_key_env}
 *   state_dir: directory; loaded when present, created by afa_engine_save
 */
afa_status afa_engine_create(const char* config_json, afa_engine** out);
void afa_engine_free(afa_engine* engine);

/* Exactly one of user_id / (voice, voice_dim > 0) when routing is enabled. */
afa_status afa_engine_turn(afa_engine* engine, const char* user_id,
                           const double* voice, size_t voice_dim, const char* query,
                           char** response_out, char** resolved_user_out);

afa_status afa_engine_save(afa_engine* engine);

/* ---- evaluation harness ------------------------------------------------ */

/* Validates a PAT-format JSONL dataset. summary_json_out reports
 * {"records": n, "rejects": [{"line": n, "reason": s}, ..]}. */
afa_status afa_ingest_pat(const char* path, char** summary_json_out);

/* Writes the deterministic synthetic fixture dataset. */
afa_status afa_fixture_write(const char* path, size_t n_personas,
                             size_t scenarios_per_persona, size_t turns_per_scenario);

/*
 * options_json keys (all optional except dataset):
 *   dataset: path; pairs (15); turns_per_user (10); seed (0)
 *   conditions: ["no-persona","constant","adaptive"]
 *   cold_start, voice_mode: bool; min_persona_distance: double
 *   backend: "persona_injecting"|"echo"|"scripted"|"http"; script: path
 *   url, model, api_key_env: http backend; embedder_dim (256)
 *   retrieval_k, window_size, token_budget
 */
afa_status afa_eval_run(const char* options_json, char** report_json_out);

/* format: "text" | "json" | "csv" */
afa_status afa_report_render(const char* report_json, const char* format,
                             char** rendered_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AFA_H */
