#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "focus/errors.hpp"
#include "focus/model.hpp"

using namespace focus;

namespace {

FeatureSet random_batch(std::mt19937_64& rng, std::size_t n, std::size_t dim, std::size_t classes) {
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureSet out;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureExample ex;
    for (std::size_t d = 0; d < dim; ++d) ex.x.push_back(g(rng));
    ex.y = rng() % classes;
    out.push_back(ex);
  }
  return out;
}

// Central differences against the analytic gradient at `probes` random coordinates.
void finite_difference_check(GlobalModel model, const FeatureSet& batch, std::mt19937_64& rng,
                             int probes) {
  const auto lg = loss_and_gradient(model, batch);
  const double h = 1e-6;
  for (int i = 0; i < probes; ++i) {
    const std::size_t p = rng() % model.params.size();
    const double saved = model.params[p];
    model.params[p] = saved + h;
    const double up = mean_loss(model, batch);
    model.params[p] = saved - h;
    const double down = mean_loss(model, batch);
    model.params[p] = saved;
    const double numeric = (up - down) / (2 * h);
    CHECK(lg.gradient[p] == doctest::Approx(numeric).epsilon(1e-5).scale(1.0));
  }
}

}  // namespace

TEST_CASE("parameter counts and model spec") {
  Architecture logistic{ModelKind::logistic, 5, 3, 0};
  CHECK(logistic.parameter_count() == 3 * 5 + 3);
  Architecture mlp{ModelKind::mlp, 5, 3, 4};
  CHECK(mlp.parameter_count() == 4 * 5 + 4 + 3 * 4 + 3);
  auto m = init_model(mlp, 1);
  CHECK(m.params.size() == mlp.parameter_count());
  CHECK(m.spec().size_bytes() == 4.0 * static_cast<double>(mlp.parameter_count()));
  CHECK(to_string(ModelKind::mlp) == "mlp");
  CHECK(parse_model_kind("logistic") == ModelKind::logistic);
  CHECK_THROWS(parse_model_kind("cnn"));
}

TEST_CASE("init: logistic is zero, mlp weights bounded by fan-in") {
  auto lr = init_model({ModelKind::logistic, 4, 2, 0}, 9);
  for (double p : lr.params) CHECK(p == 0.0);
  auto mlp = init_model({ModelKind::mlp, 16, 3, 8}, 9);
  for (std::size_t i = 0; i < 16 * 8; ++i) CHECK(std::abs(mlp.params[i]) <= 0.25);
  CHECK(init_model({ModelKind::mlp, 16, 3, 8}, 9).params == mlp.params);
  CHECK(init_model({ModelKind::mlp, 16, 3, 8}, 10).params != mlp.params);
}

TEST_CASE("zero logistic model: loss ln 2 and hand gradient") {
  GlobalModel m = init_model({ModelKind::logistic, 1, 2, 0}, 0);
  FeatureSet batch{{{1.0}, 0}};
  const auto lg = loss_and_gradient(m, batch);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // layout W[0][0], W[1][0], b[0], b[1]; dL/dz = p - onehot(y) = (-0.5, 0.5)
  REQUIRE(lg.gradient.size() == 4);
  CHECK(lg.gradient[0] == doctest::Approx(-0.5));
  CHECK(lg.gradient[1] == doctest::Approx(0.5));
  CHECK(lg.gradient[2] == doctest::Approx(-0.5));
  CHECK(lg.gradient[3] == doctest::Approx(0.5));
  const auto p = predict_proba(m, std::vector<double>{3.0});
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(predict(m, std::vector<double>{3.0}) == 0);  // first max
}

TEST_CASE("property: analytic gradients match finite differences") {
  std::mt19937_64 rng(42);
  SUBCASE("logistic") {
    auto m = init_model({ModelKind::logistic, 6, 4, 0}, 0);
    std::normal_distribution<double> g(0.0, 0.5);
    for (double& p : m.params) p = g(rng);
    finite_difference_check(m, random_batch(rng, 12, 6, 4), rng, 100);
  }
  SUBCASE("mlp") {
    auto m = init_model({ModelKind::mlp, 6, 4, 5}, 3);
    finite_difference_check(m, random_batch(rng, 12, 6, 4), rng, 100);
  }
}

TEST_CASE("shape errors and accuracy") {
  auto m = init_model({ModelKind::logistic, 3, 2, 0}, 0);
  FeatureSet bad{{{1.0, 2.0}, 0}};
  CHECK_THROWS_AS(loss_and_gradient(m, bad), ShapeError);
  FeatureSet label_out_of_range{{{1.0, 2.0, 3.0}, 5}};
  CHECK_THROWS(loss_and_gradient(m, label_out_of_range));

  m.params = {1, 0, 0, -1, 0, 0, 0, 0};  // class 0 iff x0 > 0
  FeatureSet data{{{1, 0, 0}, 0}, {{-1, 0, 0}, 1}, {{2, 0, 0}, 1}, {{-2, 0, 0}, 1}};
  CHECK(accuracy(m, data) == doctest::Approx(0.75));
}
