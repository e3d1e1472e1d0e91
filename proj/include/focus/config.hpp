#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "focus/cost.hpp"
#include "focus/fm.hpp"
#include "focus/icl.hpp"
#include "focus/model.hpp"
#include "focus/partitioner.hpp"
#include "json.hpp"

namespace focus {

// Run configuration. Every object rejects unknown keys; errors carry the key
// path, e.g. "scenario[0].lrr". `to_json` emits the canonical form with all
// defaults spelled out, and parsing it back gives an equal config.

enum class DataKind { synthetic_text, next_word, blobs, jsonl };

std::string to_string(DataKind kind);

struct JsonlSource {
  std::string path;         // private per-client records
  std::string public_path;  // public pool for the backend, client ids ignored
  std::vector<std::string> classes;  // schema; empty means sorted labels of the public pool

  bool operator==(const JsonlSource&) const = default;
};

struct DataConfig {
  DataKind kind = DataKind::synthetic_text;
  std::string task = "task";
  std::string description;
  SynthCorpusSpec text;    // kind = synthetic_text (seed comes from the run seed)
  NextWordSpec next_word;  // kind = next_word
  BlobsSpec blobs;         // kind = blobs
  JsonlSource jsonl;       // kind = jsonl
  PartitionSpec partition;            // not used for next_word and jsonl
  std::size_t train_per_client = 5;   // not used for jsonl

  bool operator==(const DataConfig&) const;
};

struct BackendConfig {
  std::size_t embedding_dim = 256;
  ScorerParams scorer;

  bool operator==(const BackendConfig&) const = default;
};

enum class ScenarioKind {
  fl,
  local_only,
  icl_zero_shot,
  icl_similarity,
  icl_kshot,
  icl_decomposed,
  icl_calibrated,
  icl_decomposed_calibrated,
  cost_table
};

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& s);
bool is_icl(ScenarioKind kind);

/// Federated-learning degradation factors that are recorded but not simulated.
const std::vector<std::string>& known_unimplemented_flags();

struct ScenarioConfig {
  std::string name;
  ScenarioKind kind = ScenarioKind::icl_zero_shot;

  // fl / local_only
  ModelKind model = ModelKind::logistic;
  std::size_t hidden = 16;
  std::size_t rounds = 30;
  double client_fraction = 1.0;
  std::size_t epochs = 1;
  double lr = 0.5;
  std::size_t batch = 8;
  bool init_from_scorer = false;

  // icl_*
  DemoPolicyKind policy = DemoPolicyKind::user_privacy;
  std::size_t k = 0;
  bool resample_per_example = false;
  bool reads_task_revealing = true;
  std::size_t group_size = 4;
  std::vector<std::string> cf_inputs{""};

  // cost_table
  CostModelInputs cost;

  std::vector<std::string> unimplemented_flags;
  std::optional<DataConfig> data;  // replaces the run's data block

  bool operator==(const ScenarioConfig&) const;
};

struct RunConfig {
  std::string name;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;  // empty: runs/<name>
  double tasks_supported = 1;
  std::size_t threads = 0;  // 0: hardware concurrency
  NetworkSpec network;
  BackendConfig backend;
  DataConfig data;
  std::vector<ScenarioConfig> scenarios;

  const DataConfig& data_for(const ScenarioConfig& scenario) const {
    return scenario.data ? *scenario.data : data;
  }

  bool operator==(const RunConfig&) const;
};

RunConfig parse_config(const nlohmann::json& j);
/// Reads and parses a file; relative jsonl paths resolve against the file's directory.
RunConfig parse_config_file(const std::string& path);
nlohmann::ordered_json to_json(const RunConfig& config);

}  // namespace focus
