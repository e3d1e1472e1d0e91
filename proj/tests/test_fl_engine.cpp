#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "focus/errors.hpp"
#include "focus/fl_engine.hpp"
#include "focus/partitioner.hpp"

using namespace focus;

namespace {

FeatureSet toy_data(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureSet out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % 2;
    out.push_back({{g(rng) + (y ? 2.0 : -2.0), g(rng)}, y});
  }
  return out;
}

LocalUpdate update(std::string id, std::size_t n, std::vector<double> params) {
  return LocalUpdate{std::move(id), n, std::move(params), {}};
}

std::vector<ClientData> blob_clients(std::size_t num_clients, std::uint64_t seed, FeatureSet* test) {
  BlobsSpec spec;
  spec.num_classes = 3;
  spec.dim = 4;
  spec.points_per_class = 200;
  spec.seed = seed;
  auto corpus = synth_gaussian_blobs(spec);
  PartitionSpec ps;
  ps.num_clients = num_clients;
  ps.seed = seed;
  auto silos = split_train_test(partition_iid(corpus.private_pool.examples, ps, "b"), "b", 30, seed);
  auto features = [](const LabeledExample& ex) { return ex.features(); };
  std::vector<ClientData> out;
  for (const auto& s : silos) {
    out.push_back({s.id(), featurize(s.train("b"), corpus.schema, features)});
    auto t = featurize(s.test("b"), corpus.schema, features);
    test->insert(test->end(), t.begin(), t.end());
  }
  return out;
}

}  // namespace

TEST_CASE("local_train with lr 0 or no epochs returns the start model") {
  const auto data = toy_data(10, 1);
  auto start = init_model({ModelKind::mlp, 2, 2, 3}, 4);
  for (auto cfg : {TrainConfig{3, 0.0, 4, 1}, TrainConfig{0, 0.5, 4, 1}}) {
    auto u = local_train(start, "c", data, cfg);
    REQUIRE(u);
    CHECK(u->params == start.params);
    CHECK(u->num_samples == 10);
  }
  CHECK_FALSE(local_train(start, "c", {}, TrainConfig{}).has_value());
}

TEST_CASE("one full-batch step equals a hand step") {
  const auto data = toy_data(6, 2);
  auto start = init_model({ModelKind::logistic, 2, 2, 0}, 0);
  start.params = {0.1, -0.2, 0.3, 0.05, 0.0, 0.1};
  const double lr = 0.3;
  auto u = local_train(start, "c", data, TrainConfig{1, lr, 100, 0});
  REQUIRE(u);
  const auto g = loss_and_gradient(start, data).gradient;
  for (std::size_t p = 0; p < g.size(); ++p) CHECK(u->params[p] == doctest::Approx(start.params[p] - lr * g[p]).epsilon(1e-15));
  CHECK(u->loss_trace.size() == 1);
}

TEST_CASE("fedavg weighting") {
  std::vector<LocalUpdate> ups{update("a", 1, {0, 0}), update("b", 3, {4, 8})};
  CHECK(fedavg_aggregate(ups) == std::vector<double>{3, 6});
  CHECK_THROWS_AS(fedavg_aggregate(std::vector<LocalUpdate>{}), NoProgress);
  ups.push_back(update("c", 1, {1}));
  CHECK_THROWS_AS(fedavg_aggregate(ups), ShapeError);
}

TEST_CASE("property: fedavg is order free and equals the weighted mean") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LocalUpdate> ups;
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i)
      ups.push_back(update("c" + std::to_string(i), 1 + rng() % 20, {u(rng), u(rng), u(rng)}));
    const auto ref = fedavg_aggregate(ups);
    double total = 0;
    std::vector<double> oracle(3, 0.0);
    for (const auto& up : ups) total += static_cast<double>(up.num_samples);
    for (const auto& up : ups)
      for (int p = 0; p < 3; ++p) oracle[p] += static_cast<double>(up.num_samples) * up.params[p];
    for (int p = 0; p < 3; ++p) CHECK(ref[p] == doctest::Approx(oracle[p] / total).epsilon(1e-12));
    std::shuffle(ups.begin(), ups.end(), rng);
    CHECK(fedavg_aggregate(ups) == ref);  // bitwise, thanks to the fixed reduction order
  }
}

TEST_CASE("zero rounds emit nothing") {
  std::vector<ClientData> clients{{"a", toy_data(4, 1)}};
  auto start = init_model({ModelKind::logistic, 2, 2, 0}, 0);
  FlowLedger ledger;
  CostTally tally;
  auto r = run_federated(start, clients, "t", FlConfig{0, 1.0, {}}, ledger, tally);
  CHECK(ledger.size() == 0);
  CHECK(r.rounds.empty());
  CHECK(r.model.params == start.params);
  CHECK(tally.bytes_up == 0);
}

TEST_CASE("single-client FedAvg follows centralized training") {
  const auto data = toy_data(20, 3);
  std::vector<ClientData> clients{{"only", data}};
  auto start = init_model({ModelKind::mlp, 2, 2, 4}, 7);
  FlConfig cfg{15, 1.0, TrainConfig{1, 0.2, 1000, 11}};
  FlowLedger ledger;
  CostTally tally;
  auto fl = run_federated(start, clients, "t", cfg, ledger, tally);
  auto central = centralized_train(start, data, TrainConfig{15, 0.2, 1000, 99});
  for (std::size_t p = 0; p < central.params.size(); ++p)
    CHECK(std::abs(fl.model.params[p] - central.params[p]) <= 1e-12);
}

TEST_CASE("FedAvg on IID blobs reaches high accuracy") {
  FeatureSet test;
  auto clients = blob_clients(10, 21, &test);
  auto start = init_model({ModelKind::logistic, 4, 3, 0}, 0);
  FlowLedger ledger;
  CostTally tally;
  auto r = run_federated(start, clients, "b", FlConfig{30, 1.0, TrainConfig{1, 0.1, 8, 5}}, ledger, tally);
  CHECK(accuracy(r.model, test) >= 0.95);
  CHECK(r.rounds.back().loss < r.rounds.front().loss);
}

TEST_CASE("flow ledger: one event each way per participating client per round") {
  FeatureSet test;
  auto clients = blob_clients(6, 2, &test);
  clients.push_back({"empty", {}});
  auto start = init_model({ModelKind::logistic, 4, 3, 0}, 0);
  for (double fraction : {1.0, 0.5}) {
    FlowLedger ledger;
    CostTally tally;
    const std::size_t rounds = 4;
    auto r = run_federated(start, clients, "b", FlConfig{rounds, fraction, TrainConfig{}}, ledger, tally);
    const std::size_t per_round = fraction == 1.0 ? 6 : 3;
    const auto events = ledger.snapshot();
    CHECK(events.size() == 2 * per_round * rounds);
    std::size_t up = 0, down = 0;
    for (const auto& e : events) {
      CHECK(e.payload() != PayloadKind::raw_data);
      CHECK(e.source().id != "empty");
      CHECK(e.sink().id != "empty");
      up += e.payload() == PayloadKind::local_update;
      down += e.payload() == PayloadKind::model_params;
    }
    CHECK(up == per_round * rounds);
    CHECK(down == per_round * rounds);
    const double model_bytes = start.spec().size_bytes();
    CHECK(tally.bytes_up == doctest::Approx(model_bytes * static_cast<double>(up)));
    CHECK(ledger_bytes(events).up == static_cast<std::uint64_t>(tally.bytes_up));
    for (const auto& s : r.rounds) CHECK(s.clients.size() == per_round);
  }
}

TEST_CASE("run_federated is deterministic") {
  FeatureSet test;
  auto clients = blob_clients(5, 8, &test);
  auto start = init_model({ModelKind::mlp, 4, 3, 6}, 1);
  FlConfig cfg{5, 0.6, TrainConfig{2, 0.1, 4, 17}};
  FlowLedger l1, l2;
  CostTally t1, t2;
  auto a = run_federated(start, clients, "b", cfg, l1, t1);
  auto b = run_federated(start, clients, "b", cfg, l2, t2);
  CHECK(a.model.params == b.model.params);
  CHECK(l1.snapshot() == l2.snapshot());
  CHECK(t1 == t2);
}

TEST_CASE("run_federated without any training data makes no progress") {
  std::vector<ClientData> clients{{"a", {}}};
  FlowLedger ledger;
  CostTally tally;
  CHECK_THROWS_AS(run_federated(init_model({ModelKind::logistic, 2, 2, 0}, 0), clients, "t",
                                FlConfig{}, ledger, tally),
                  NoProgress);
}

TEST_CASE("local-only training") {
  auto start = init_model({ModelKind::logistic, 2, 2, 0}, 0);
  ClientData empty{"a", {}};
  CHECK(train_local_only(start, empty, TrainConfig{5, 0.5, 4, 0}).params == start.params);
  ClientData client{"b", toy_data(16, 4)};
  CostTally tally;
  auto m = train_local_only(start, client, TrainConfig{20, 0.5, 4, 0}, &tally);
  CHECK(accuracy(m, client.train) >= 0.9);
  CHECK(tally.train_flops > 0);
  CHECK(tally.bytes_up == 0);
  CHECK(tally.bytes_down == 0);
}
