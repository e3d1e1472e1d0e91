#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focus/cost.hpp"
#include "focus/ledger.hpp"
#include "focus/model.hpp"

namespace focus {

struct TrainConfig {
  std::size_t epochs = 1;
  double lr = 0.1;
  std::size_t batch = 8;  // batch >= n means full-batch steps in data order
  std::uint64_t seed = 0;
};

struct LocalUpdate {
  std::string client_id;
  std::size_t num_samples = 0;
  std::vector<double> params;
  std::vector<double> loss_trace;  // one entry per SGD step
};

struct ClientData {
  std::string client_id;
  FeatureSet train;
};

struct FlConfig {
  std::size_t rounds = 1;
  double client_fraction = 1.0;
  TrainConfig local;
};

struct RoundStats {
  std::size_t round = 0;
  std::vector<std::string> clients;
  double loss = 0.0;  // sample-weighted mean of client step losses
  double bytes_up = 0.0;
  double bytes_down = 0.0;
  double flops = 0.0;
};

struct FederatedResult {
  GlobalModel model;
  std::vector<RoundStats> rounds;
};

using FeatureMap = std::function<std::vector<double>(const LabeledExample&)>;

/// Maps labels through the schema; throws SchemaViolation on unknown labels.
FeatureSet featurize(const Dataset& data, const LabelSchema& schema, const FeatureMap& map);

/// Seeded minibatch SGD from `start`. Returns nullopt (skip) when `data` is empty.
std::optional<LocalUpdate> local_train(const GlobalModel& start, const std::string& client_id,
                                       std::span<const FeatureExample> data,
                                       const TrainConfig& config);

/// theta = sum_i (n_i / sum_j n_j) * theta_i, reduced in ascending client-id order.
std::vector<double> fedavg_aggregate(std::span<const LocalUpdate> updates);

/// FedAvg. Every participating client gets one inbound model_params event and
/// one outbound local_update event per round; `tally` accumulates the round costs.
FederatedResult run_federated(const GlobalModel& initial, std::span<const ClientData> clients,
                              const std::string& task_id, const FlConfig& config,
                              FlowLedger& ledger, CostTally& tally,
                              const std::string& run_id = "run");

/// Plain seeded SGD on pooled data.
GlobalModel centralized_train(const GlobalModel& initial, std::span<const FeatureExample> data,
                              const TrainConfig& config);

/// SGD on one client's data only. There is no ledger parameter: nothing leaves the silo.
GlobalModel train_local_only(const GlobalModel& initial, const ClientData& client,
                             const TrainConfig& config, CostTally* tally = nullptr);

}  // namespace focus
