#include "focus/fl_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "focus/random.hpp"

namespace focus {

namespace {

// Runs epochs of minibatch SGD in place and returns the per-step losses.
std::vector<double> sgd(GlobalModel& model, std::span<const FeatureExample> data,
                        const TrainConfig& config) {
  std::vector<double> trace;
  if (data.empty() || config.epochs == 0) return trace;
  const std::size_t n = data.size();
  const std::size_t batch = std::max<std::size_t>(1, std::min(config.batch, n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  FeatureSet buffer;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < n) {
      Rng rng(derive_seed(config.seed, {epoch, 0x56Dull}));
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle_in_place(order, rng);
    }
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::span<const FeatureExample> step_data;
      if (batch == n) {
        step_data = data;
      } else {
        buffer.clear();
        for (std::size_t i = start; i < end; ++i) buffer.push_back(data[order[i]]);
        step_data = buffer;
      }
      auto lg = loss_and_gradient(model, step_data);
      trace.push_back(lg.loss);
      if (config.lr != 0.0)
        for (std::size_t p = 0; p < model.params.size(); ++p) model.params[p] -= config.lr * lg.gradient[p];
    }
  }
  return trace;
}

double examples_processed(std::size_t n, const TrainConfig& config) {
  return static_cast<double>(config.epochs) * static_cast<double>(n);
}

}  // namespace

FeatureSet featurize(const Dataset& data, const LabelSchema& schema, const FeatureMap& map) {
  FeatureSet out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back({map(ex), schema.require_index(ex.label)});
  return out;
}

std::optional<LocalUpdate> local_train(const GlobalModel& start, const std::string& client_id,
                                       std::span<const FeatureExample> data,
                                       const TrainConfig& config) {
  if (data.empty()) return std::nullopt;
  GlobalModel model = start;
  LocalUpdate update;
  update.client_id = client_id;
  update.num_samples = data.size();
  update.loss_trace = sgd(model, data, config);
  update.params = std::move(model.params);
  return update;
}

std::vector<double> fedavg_aggregate(std::span<const LocalUpdate> updates) {
  if (updates.empty()) throw NoProgress("fedavg_aggregate needs at least one update");
  std::vector<const LocalUpdate*> sorted;
  double total = 0.0;
  for (const auto& u : updates) {
    if (u.num_samples == 0) throw NoProgress("update from '" + u.client_id + "' has no samples");
    if (u.params.size() != updates.front().params.size())
      throw ShapeError("updates have different parameter lengths");
    sorted.push_back(&u);
    total += static_cast<double>(u.num_samples);
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto* a, const auto* b) { return a->client_id < b->client_id; });
  std::vector<double> out(updates.front().params.size(), 0.0);
  for (const auto* u : sorted) {
    const double w = static_cast<double>(u->num_samples) / total;
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += w * u->params[p];
  }
  return out;
}

FederatedResult run_federated(const GlobalModel& initial, std::span<const ClientData> clients,
                              const std::string& task_id, const FlConfig& config,
                              FlowLedger& ledger, CostTally& tally, const std::string& run_id) {
  std::vector<const ClientData*> trainable;
  for (const auto& c : clients)
    if (!c.train.empty()) trainable.push_back(&c);
  if (trainable.empty()) throw NoProgress("no client has training data");
  std::stable_sort(trainable.begin(), trainable.end(),
                   [](const auto* a, const auto* b) { return a->client_id < b->client_id; });
  if (!(config.client_fraction > 0.0 && config.client_fraction <= 1.0))
    throw Error("client_fraction must be in (0, 1]");

  FederatedResult result{initial, {}};
  const auto model_bytes = static_cast<std::uint64_t>(initial.spec().size_bytes());
  const ModelSpec spec = initial.spec();
  const std::size_t num = trainable.size();
  const std::size_t per_round = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(config.client_fraction * static_cast<double>(num) - 1e-12)),
      1, num);

  std::vector<std::string> ever_participated;
  for (std::size_t round = 0; round < config.rounds; ++round) {
    Rng rng(derive_seed(config.local.seed, {round, 0x5A3Full}));
    auto order = shuffled_indices(num, rng);
    order.resize(per_round);
    std::sort(order.begin(), order.end());

    RoundStats stats;
    stats.round = round;
    for (auto idx : order) {
      const auto& client = *trainable[idx];
      stats.clients.push_back(client.client_id);
      ledger.append(FlowEvent(run_id, round, Endpoint::central(), Endpoint::silo(client.client_id),
                              PayloadKind::model_params, model_bytes, round > 0, true, task_id));
      stats.bytes_down += static_cast<double>(model_bytes);
    }

    std::vector<LocalUpdate> updates;
    double loss_weight = 0.0;
    for (auto idx : order) {
      const auto& client = *trainable[idx];
      TrainConfig local = config.local;
      local.seed = derive_seed(config.local.seed, {round, hash_string(client.client_id)});
      auto update = local_train(result.model, client.client_id, client.train, local);
      if (!update) continue;
      if (!update->loss_trace.empty()) {
        double mean = std::accumulate(update->loss_trace.begin(), update->loss_trace.end(), 0.0) /
                      static_cast<double>(update->loss_trace.size());
        stats.loss += mean * static_cast<double>(update->num_samples);
        loss_weight += static_cast<double>(update->num_samples);
      }
      stats.flops += training_flops(spec, examples_processed(client.train.size(), local), 1.0, 1.0);
      updates.push_back(std::move(*update));
    }
    for (const auto& u : updates) {
      ledger.append(FlowEvent(run_id, round, Endpoint::silo(u.client_id), Endpoint::central(),
                              PayloadKind::local_update, model_bytes, true, true, task_id));
      stats.bytes_up += static_cast<double>(model_bytes);
      if (std::find(ever_participated.begin(), ever_participated.end(), u.client_id) ==
          ever_participated.end())
        ever_participated.push_back(u.client_id);
    }
    if (loss_weight > 0.0) stats.loss /= loss_weight;
    result.model.params = fedavg_aggregate(updates);

    tally.train_flops += stats.flops;
    tally.bytes_up += stats.bytes_up;
    tally.bytes_down += stats.bytes_down;
    result.rounds.push_back(std::move(stats));
  }
  tally.clients = static_cast<double>(ever_participated.size());
  if (tally.clients > 0) {
    tally.per_client_bytes_up = tally.bytes_up / tally.clients;
    tally.per_client_bytes_down = tally.bytes_down / tally.clients;
  }
  return result;
}

GlobalModel centralized_train(const GlobalModel& initial, std::span<const FeatureExample> data,
                              const TrainConfig& config) {
  if (data.empty()) throw NoProgress("centralized_train needs a non-empty dataset");
  GlobalModel model = initial;
  sgd(model, data, config);
  return model;
}

GlobalModel train_local_only(const GlobalModel& initial, const ClientData& client,
                             const TrainConfig& config, CostTally* tally) {
  GlobalModel model = initial;
  sgd(model, client.train, config);
  if (tally)
    tally->train_flops +=
        training_flops(initial.spec(), examples_processed(client.train.size(), config), 1.0, 1.0);
  return model;
}

}  // namespace focus
