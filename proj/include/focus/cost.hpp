#pragma once

#include <string>

#include "focus/domain.hpp"
#include "json.hpp"

namespace focus {

// Transformer cost formulas. All values are exact products; rounding happens
// only in the human-readable strings.

/// 2 * 3 * params * steps * batch * seq_len (forward + backward).
double training_flops(const ModelSpec& spec, double steps, double batch, double seq_len);

/// 2 * params * input_len, with attention key/value vectors cached.
double inference_flops(const ModelSpec& spec, double input_len);

struct CommBytes {
  double down = 0.0;
  double up = 0.0;
};

/// Per client, per direction: rounds * params * bytes_per_param.
CommBytes fl_comm_bytes(const ModelSpec& spec, double rounds);

/// One-time model download for in-context learning.
CommBytes icl_download_bytes(const ModelSpec& spec);

/// Seconds to move `bytes` at `bits_per_second`, latency ignored.
double transfer_time(double bytes, double bits_per_second);

struct NetworkSpec {
  double down_bps = 61e6;
  double up_bps = 8e6;

  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

enum class ScenarioFamily { federated, local_only, icl, cost_model };

std::string to_string(ScenarioFamily family);

struct CostTally {
  double train_flops = 0.0;
  double inference_flops = 0.0;
  double inferences = 0.0;
  double bytes_up = 0.0;    // whole system
  double bytes_down = 0.0;  // whole system
  double clients = 0.0;
  double per_client_bytes_up = 0.0;
  double per_client_bytes_down = 0.0;
  double transfer_seconds = 0.0;  // per client, bandwidth only
  double tasks_supported = 1.0;

  bool operator==(const CostTally&) const = default;
};

/// Applies the task multiplier and network model to a raw single-task tally.
/// Federated and local tallies scale with tasks_supported; the ICL download does not.
CostTally tally_scenario(ScenarioFamily family, const CostTally& raw, const NetworkSpec& network,
                         double tasks_supported);

struct CostModelInputs {
  double fl_params = 1e8;
  double icl_params = 1e10;
  double bytes_per_param = 4;
  double rounds = 100;
  double steps = 1000;
  double batch = 32;
  double seq_len = 512;         // training length and FL inference length
  double icl_input_len = 1024;  // ICL prompt length
  NetworkSpec network;
  double tasks_supported = 1;

  bool operator==(const CostModelInputs&) const = default;
};

/// FL vs ICL resource comparison for one pair of model sizes.
struct CostModelReport {
  CostModelInputs inputs;
  double fl_training_flops = 0;
  double fl_inference_flops = 0;
  double fl_bytes_down = 0;
  double fl_bytes_up = 0;
  double fl_transfer_seconds = 0;
  double fl_storage_bytes = 0;
  double icl_training_flops = 0;
  double icl_inference_flops = 0;
  double icl_download_bytes = 0;
  double icl_download_seconds = 0;
  double icl_storage_bytes = 0;
};

CostModelReport evaluate_cost_model(const CostModelInputs& inputs);

std::string format_bytes(double bytes);
std::string format_hours(double seconds);
std::string format_flops(double flops);

nlohmann::ordered_json to_json(const CostTally& tally);
nlohmann::ordered_json to_json(const CostModelReport& report);

}  // namespace focus
