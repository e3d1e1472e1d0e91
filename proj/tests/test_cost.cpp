#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "focus/cost.hpp"
#include "focus/errors.hpp"

using namespace focus;

namespace {

// Rounds to one significant figure, the precision the reference cost table uses.
double one_sig(double v) {
  const double p = std::pow(10.0, std::floor(std::log10(v)));
  return std::round(v / p) * p;
}

}  // namespace

TEST_CASE("reference cost table") {
  const auto r = evaluate_cost_model(CostModelInputs{});
  CHECK(r.fl_training_flops == 9830400000000000.0);
  CHECK(one_sig(r.fl_training_flops) == 1e16);
  CHECK(one_sig(r.fl_inference_flops) == 1e11);
  CHECK(one_sig(r.icl_inference_flops) == 2e13);
  CHECK(r.icl_training_flops == 0.0);
  CHECK(r.fl_bytes_down == 40e9);
  CHECK(r.fl_bytes_up == 40e9);
  CHECK(r.icl_download_bytes == 40e9);
  CHECK(r.icl_storage_bytes == 40e9);
  CHECK(r.fl_storage_bytes == 400e6);
  CHECK(r.icl_download_seconds / 3600.0 == doctest::Approx(1.5).epsilon(0.05));
  CHECK(std::round(r.fl_transfer_seconds / 3600.0) == 13.0);
  CHECK(format_bytes(r.icl_download_bytes) == "40 GB");
  CHECK(format_bytes(r.fl_storage_bytes) == "400 MB");
}

TEST_CASE("cost formulas against hand products") {
  const ModelSpec spec(3e6, 2, 128);
  CHECK(training_flops(spec, 10, 4, 64) == 2.0 * 3.0 * 3e6 * 10 * 4 * 64);
  CHECK(inference_flops(spec, 256) == 2.0 * 3e6 * 256);
  CHECK(fl_comm_bytes(spec, 7).up == 7 * 3e6 * 2);
  CHECK(fl_comm_bytes(spec, 7).down == 7 * 3e6 * 2);
  CHECK(icl_download_bytes(spec).down == 6e6);
  CHECK(icl_download_bytes(spec).up == 0.0);
  CHECK(transfer_time(1e6, 8e6) == 1.0);
  CHECK_THROWS(transfer_time(1.0, 0.0));
}

TEST_CASE("zero work costs nothing") {
  const ModelSpec spec(1e8);
  CHECK(training_flops(spec, 0, 32, 512) == 0.0);
  CHECK(fl_comm_bytes(spec, 0).up == 0.0);
  CHECK(transfer_time(0.0, 1e6) == 0.0);
}

TEST_CASE("property: costs are linear in each factor") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 1000.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double params = u(rng), steps = u(rng), batch = u(rng), len = u(rng), c = u(rng);
    const ModelSpec spec(params), scaled(params * c);
    const double base = training_flops(spec, steps, batch, len);
    CHECK(training_flops(scaled, steps, batch, len) == doctest::Approx(c * base));
    CHECK(training_flops(spec, c * steps, batch, len) == doctest::Approx(c * base));
    CHECK(training_flops(spec, steps, c * batch, len) == doctest::Approx(c * base));
    CHECK(training_flops(spec, steps, batch, c * len) == doctest::Approx(c * base));
    CHECK(inference_flops(spec, c * len) == doctest::Approx(c * inference_flops(spec, len)));
    CHECK(fl_comm_bytes(spec, c * steps).up == doctest::Approx(c * fl_comm_bytes(spec, steps).up));
  }
}

TEST_CASE("task multiplier scales federated costs but not the ICL download") {
  CostTally raw;
  raw.train_flops = 10;
  raw.inference_flops = 4;
  raw.inferences = 2;
  raw.bytes_up = 100;
  raw.bytes_down = 200;
  raw.clients = 2;
  raw.per_client_bytes_up = 50;
  raw.per_client_bytes_down = 100;
  const NetworkSpec net{8.0, 8.0};
  const auto fl = tally_scenario(ScenarioFamily::federated, raw, net, 3);
  CHECK(fl.train_flops == 30);
  CHECK(fl.bytes_up == 300);
  CHECK(fl.per_client_bytes_down == 300);
  CHECK(fl.transfer_seconds == doctest::Approx((150 + 300) * 8 / 8.0));
  CHECK(fl.tasks_supported == 3);

  CostTally icl_raw = raw;
  icl_raw.train_flops = 0;
  icl_raw.bytes_up = 0;
  icl_raw.per_client_bytes_up = 0;
  const auto icl = tally_scenario(ScenarioFamily::icl, icl_raw, net, 3);
  CHECK(icl.bytes_down == 200);
  CHECK(icl.per_client_bytes_down == 100);
  CHECK(icl.inference_flops == 12);
  CHECK(icl.train_flops == 0);
  CHECK_THROWS(tally_scenario(ScenarioFamily::icl, raw, net, 0.5));

  CostModelInputs in;
  in.tasks_supported = 5;
  const auto r = evaluate_cost_model(in);
  const auto r1 = evaluate_cost_model(CostModelInputs{});
  CHECK(r.fl_bytes_up == 5 * r1.fl_bytes_up);
  CHECK(r.fl_training_flops == 5 * r1.fl_training_flops);
  CHECK(r.icl_download_bytes == r1.icl_download_bytes);
}

TEST_CASE("cost json prints integral values exactly") {
  const auto j = to_json(evaluate_cost_model(CostModelInputs{}));
  CHECK(j["federated"]["training_flops"].dump() == "9830400000000000");
  CHECK(j["icl"]["download_bytes"].dump() == "40000000000");
  CHECK(j["inputs"]["down_bps"].dump() == "61000000");
  CHECK(j["icl"]["download_seconds"].is_number_float());
}
