#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "focus/domain.hpp"

namespace focus {

enum class ModelKind { logistic, mlp };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);

struct Architecture {
  ModelKind kind = ModelKind::logistic;
  std::size_t input_dim = 1;
  std::size_t num_classes = 2;
  std::size_t hidden = 0;  // mlp only

  std::size_t parameter_count() const;
  bool operator==(const Architecture&) const = default;
};

/// Flat parameter vector plus the architecture that gives it shape.
///
/// logistic: W[K][D] then b[K].
/// mlp:      W1[H][D], b1[H], W2[K][H], b2[K], tanh hidden units.
struct GlobalModel {
  Architecture arch;
  std::vector<double> params;

  ModelSpec spec() const;
};

struct FeatureExample {
  std::vector<double> x;
  std::size_t y = 0;
};

using FeatureSet = std::vector<FeatureExample>;

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Zeros for logistic; uniform(+-1/sqrt(fan_in)) weights and zero biases for mlp.
GlobalModel init_model(const Architecture& arch, std::uint64_t seed);

/// Mean cross-entropy over the batch and its exact gradient.
LossGradient loss_and_gradient(const GlobalModel& model, std::span<const FeatureExample> batch);
double mean_loss(const GlobalModel& model, std::span<const FeatureExample> batch);

std::vector<double> predict_proba(const GlobalModel& model, std::span<const double> x);
std::size_t predict(const GlobalModel& model, std::span<const double> x);
double accuracy(const GlobalModel& model, std::span<const FeatureExample> data);

}  // namespace focus
