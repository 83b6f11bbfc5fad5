// afa command-line tool. Talks to the engine exclusively through the C API in
// afa.h; everything here is argument plumbing and printing.
//
// Exit codes: 0 ok, 1 IO, 2 state conflict, 3 backend, 4 data.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "afa.h"

namespace {

int exit_code_for(afa_status status) {
  switch (status) {
    case AFA_OK: return 0;
    case AFA_STATUS_IO: return 1;
    case AFA_STATUS_STATE: return 2;
    case AFA_STATUS_BACKEND: return 3;
    case AFA_STATUS_DATA: return 4;
    case AFA_STATUS_INVALID: return 1;
    case AFA_STATUS_INTERNAL: return 1;
  }
  return 1;
}

int fail(afa_status status) {
  std::cerr << "error: " << afa_last_error() << "\n";
  return exit_code_for(status);
}

struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { afa_string_free(value); }
};

// Flags override config-file values, which override built-in defaults.
nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) {
    throw CLI::ValidationError("--config", "cannot read " + path);
  }
  return nlohmann::json::parse(in);
}

std::vector<double> parse_vector(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  return doc.get<std::vector<double>>();
}

std::vector<double> read_vector_arg(const std::string& inline_or_path) {
  if (!inline_or_path.empty() && inline_or_path.front() == '[') {
    return parse_vector(inline_or_path);
  }
  std::ifstream in(inline_or_path);
  if (!in) throw std::runtime_error("cannot read embedding file " + inline_or_path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return parse_vector(content);
}

std::string registry_path(const std::string& state_dir) {
  return state_dir + "/registry.json";
}

afa_status open_or_create_registry(const std::string& path, afa_registry** out) {
  std::ifstream probe(path);
  if (probe.good()) return afa_registry_open(path.c_str(), "user-", out);
  return afa_registry_create("user-", out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"afa: identity-aware multi-user dialogue memory engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::string state_dir = "afa-state";
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--state-dir", state_dir, "engine/registry state directory");
  app.add_option("--seed", seed, "seed for all randomized steps");

  // enroll
  auto* enroll = app.add_subcommand("enroll", "enroll a speaker from an embeddings file");
  std::string enroll_user, enroll_file;
  enroll->add_option("--user", enroll_user, "user id to enroll")->required();
  enroll->add_option("--embeddings-file", enroll_file,
                     "JSONL of {\"speaker\", \"embedding\"} lines")
      ->required();

  // identify
  auto* identify = app.add_subcommand("identify", "resolve a voice embedding to a user");
  std::string identify_embedding;
  double identify_threshold = 0.70;
  identify->add_option("--embedding", identify_embedding,
                       "inline JSON array or a file containing one")
      ->required();
  identify->add_option("--threshold", identify_threshold, "match threshold");

  // chat
  auto* chat = app.add_subcommand("chat", "run one conversational turn");
  std::string chat_user, chat_voice, chat_query, chat_condition = "adaptive";
  chat->add_option("--user", chat_user, "ground-truth user id (bypasses speaker id)");
  chat->add_option("--voice-embedding", chat_voice,
                   "voice embedding (inline JSON array or file)");
  chat->add_option("--query", chat_query, "user query")->required();
  chat->add_option("--condition", chat_condition, "no-persona | constant | adaptive");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate a PAT-format JSONL dataset");
  std::string ingest_path, rejects_path;
  ingest->add_option("--dataset", ingest_path, "dataset path")->required();
  ingest->add_option("--rejects-out", rejects_path, "write rejects report JSONL here");

  // fixture
  auto* fixture = app.add_subcommand("fixture", "write the synthetic fixture dataset");
  std::string fixture_path = "fixture.jsonl";
  std::size_t fixture_personas = 30, fixture_scenarios = 2, fixture_turns = 10;
  fixture->add_option("--out", fixture_path, "output JSONL path");
  fixture->add_option("--personas", fixture_personas, "number of personas (max 30)");
  fixture->add_option("--scenarios", fixture_scenarios, "scenarios per persona");
  fixture->add_option("--turns", fixture_turns, "turns per scenario (max 10)");

  // eval
  auto* eval = app.add_subcommand("eval", "run the interleaved multi-user evaluation");
  std::string eval_dataset, eval_backend = "persona_injecting", eval_out;
  std::string eval_conditions = "no-persona,constant,adaptive";
  std::size_t eval_pairs = 15, eval_turns = 10;
  bool eval_cold = false, eval_voice = false;
  eval->add_option("--dataset", eval_dataset, "PAT-format JSONL dataset")->required();
  eval->add_option("--pairs", eval_pairs, "number of user pairs");
  eval->add_option("--turns-per-user", eval_turns, "turns contributed by each user");
  eval->add_option("--conditions", eval_conditions, "comma-separated condition list");
  eval->add_option("--backend", eval_backend,
                   "persona_injecting | echo | scripted | http");
  eval->add_option("--out", eval_out, "write the JSON report here");
  eval->add_flag("--cold-start", eval_cold, "adaptive runs start with empty profiles");
  eval->add_flag("--voice", eval_voice, "route via synthetic voice embeddings");

  // validate-speakers
  auto* validate = app.add_subcommand("validate-speakers",
                                      "synthetic speaker-identification validation");
  std::size_t v_speakers = 5, v_enroll = 5, v_test = 10, v_dim = 192;
  double v_noise = 0.05;
  validate->add_option("--speakers", v_speakers, "number of synthetic speakers");
  validate->add_option("--enroll-n", v_enroll, "enrollment utterances per speaker");
  validate->add_option("--test-n", v_test, "held-out utterances per speaker");
  validate->add_option("--noise", v_noise, "isotropic noise scale");
  validate->add_option("--dim", v_dim, "embedding dimensionality");

  // report
  auto* report = app.add_subcommand("report", "render a saved evaluation report");
  std::string report_in, report_format = "text";
  report->add_option("--in", report_in, "report JSON file")->required();
  report->add_option("--format", report_format, "text | json | csv");

  CLI11_PARSE(app, argc, argv);

  nlohmann::json config;
  try {
    config = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (config.contains("state_dir") && state_dir == "afa-state") {
    state_dir = config.at("state_dir").get<std::string>();
  }

  if (*enroll) {
    afa_registry* registry = nullptr;
    afa_status rc = open_or_create_registry(registry_path(state_dir), &registry);
    if (rc != AFA_OK) return fail(rc);
    rc = afa_registry_enroll_jsonl(registry, enroll_file.c_str(), enroll_user.c_str());
    if (rc != AFA_OK) {
      afa_registry_free(registry);
      return fail(rc);
    }
    std::error_code ec;
    std::filesystem::create_directories(state_dir, ec);
    rc = afa_registry_save(registry, registry_path(state_dir).c_str());
    size_t dim = 0;
    std::vector<double> centroid(afa_registry_dim(registry));
    double norm = 0.0;
    if (afa_registry_centroid(registry, enroll_user.c_str(), centroid.data(),
                              centroid.size(), &dim) == AFA_OK) {
      for (size_t i = 0; i < dim && i < centroid.size(); ++i) {
        norm += centroid[i] * centroid[i];
      }
      norm = std::sqrt(norm);
    }
    std::printf("enrolled %s (centroid norm %.6f, registry: %zu speakers, dim %zu)\n",
                enroll_user.c_str(), norm, afa_registry_size(registry),
                afa_registry_dim(registry));
    afa_registry_free(registry);
    return rc == AFA_OK ? 0 : fail(rc);
  }

  if (*identify) {
    std::vector<double> probe;
    try {
      probe = read_vector_arg(identify_embedding);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
    afa_registry* registry = nullptr;
    afa_status rc = open_or_create_registry(registry_path(state_dir), &registry);
    if (rc != AFA_OK) return fail(rc);
    afa_identity identity{};
    rc = afa_registry_identify(registry, probe.data(), probe.size(), identify_threshold,
                               &identity);
    if (rc != AFA_OK) {
      afa_registry_free(registry);
      return fail(rc);
    }
    std::error_code ec;
    std::filesystem::create_directories(state_dir, ec);
    rc = afa_registry_save(registry, registry_path(state_dir).c_str());
    std::printf("%s %s (similarity %.6f, threshold %.2f)\n",
                identity.is_new_speaker ? "new-speaker" : "matched", identity.user_id,
                identity.similarity, identity.threshold_used);
    afa_registry_free(registry);
    return rc == AFA_OK ? 0 : fail(rc);
  }

  if (*chat) {
    nlohmann::json engine_config = config;
    engine_config["condition"] = chat_condition;
    engine_config["state_dir"] = state_dir;
    afa_engine* engine = nullptr;
    afa_status rc = afa_engine_create(engine_config.dump().c_str(), &engine);
    if (rc != AFA_OK) return fail(rc);
    std::vector<double> voice;
    if (!chat_voice.empty()) {
      try {
        voice = read_vector_arg(chat_voice);
      } catch (const std::exception& e) {
        afa_engine_free(engine);
        std::cerr << "error: " << e.what() << "\n";
        return 1;
      }
    }
    OwnedString response, resolved;
    rc = afa_engine_turn(engine, chat_user.empty() ? nullptr : chat_user.c_str(),
                         voice.empty() ? nullptr : voice.data(), voice.size(),
                         chat_query.c_str(), &response.value, &resolved.value);
    if (rc != AFA_OK) {
      afa_engine_free(engine);
      return fail(rc);
    }
    rc = afa_engine_save(engine);
    std::cout << "[" << (resolved.value ? resolved.value : "?") << "] "
              << (response.value ? response.value : "") << "\n";
    afa_engine_free(engine);
    return rc == AFA_OK ? 0 : fail(rc);
  }

  if (*ingest) {
    OwnedString summary;
    afa_status rc = afa_ingest_pat(ingest_path.c_str(), &summary.value);
    if (rc != AFA_OK) return fail(rc);
    nlohmann::json doc = nlohmann::json::parse(summary.value);
    std::cout << "records: " << doc.at("records").get<std::size_t>()
              << ", rejects: " << doc.at("rejects").size() << "\n";
    if (!rejects_path.empty()) {
      std::ofstream out(rejects_path);
      for (const auto& reject : doc.at("rejects")) out << reject.dump() << "\n";
    } else {
      for (const auto& reject : doc.at("rejects")) {
        std::cout << "  line " << reject.at("line").get<std::size_t>() << ": "
                  << reject.at("reason").get<std::string>() << "\n";
      }
    }
    return 0;
  }

  if (*fixture) {
    afa_status rc = afa_fixture_write(fixture_path.c_str(), fixture_personas,
                                      fixture_scenarios, fixture_turns);
    if (rc != AFA_OK) return fail(rc);
    std::cout << "wrote " << fixture_path << "\n";
    return 0;
  }

  if (*eval) {
    nlohmann::json options = {{"dataset", eval_dataset},
                              {"pairs", eval_pairs},
                              {"turns_per_user", eval_turns},
                              {"seed", seed},
                              {"backend", eval_backend},
                              {"cold_start", eval_cold},
                              {"voice_mode", eval_voice}};
    for (const char* key : {"script", "url", "model", "api_key_env", "embedder_dim",
                            "retrieval_k", "window_size", "token_budget"}) {
      if (config.contains(key)) options[key] = config.at(key);
    }
    std::vector<std::string> conditions;
    std::string token;
    std::istringstream iss(eval_conditions);
    while (std::getline(iss, token, ',')) {
      if (!token.empty()) conditions.push_back(token);
    }
    options["conditions"] = conditions;
    OwnedString report_json;
    afa_status rc = afa_eval_run(options.dump().c_str(), &report_json.value);
    if (rc != AFA_OK) return fail(rc);
    if (!eval_out.empty()) {
      std::ofstream out(eval_out, std::ios::binary);
      if (!out) {
        std::cerr << "error: cannot write " << eval_out << "\n";
        return 1;
      }
      out << report_json.value;
    }
    OwnedString table;
    rc = afa_report_render(report_json.value, "text", &table.value);
    if (rc != AFA_OK) return fail(rc);
    std::cout << table.value;
    return 0;
  }

  if (*validate) {
    double accuracy = 0.0, mean_similarity = 0.0;
    std::size_t decisions = 0;
    afa_status rc = afa_validate_speakers(v_speakers, v_enroll, v_test, v_noise, v_dim,
                                          0.70, seed, &accuracy, &mean_similarity,
                                          &decisions);
    if (rc != AFA_OK) return fail(rc);
    std::printf("speakers: %zu, decisions: %zu, accuracy: %.6f, mean similarity: %.6f\n",
                v_speakers, decisions, accuracy, mean_similarity);
    return 0;
  }

  if (*report) {
    std::ifstream in(report_in);
    if (!in) {
      std::cerr << "error: cannot read " << report_in << "\n";
      return 1;
    }
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    OwnedString rendered;
    afa_status rc = afa_report_render(content.c_str(), report_format.c_str(),
                                      &rendered.value);
    if (rc != AFA_OK) return fail(rc);
    std::cout << rendered.value;
    return 0;
  }

  return 0;
}
