#include "focus/model.hpp"

#include <algorithm>
#include <cmath>

#include "focus/random.hpp"

namespace focus {

std::string to_string(ModelKind kind) { return kind == ModelKind::logistic ? "logistic" : "mlp"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "logistic") return ModelKind::logistic;
  if (s == "mlp") return ModelKind::mlp;
  throw Error("unknown model kind '" + s + "'");
}

std::size_t Architecture::parameter_count() const {
  if (kind == ModelKind::logistic) return num_classes * input_dim + num_classes;
  return hidden * input_dim + hidden + num_classes * hidden + num_classes;
}

ModelSpec GlobalModel::spec() const {
  return ModelSpec(static_cast<double>(params.size()), 4.0, 1.0);
}

GlobalModel init_model(const Architecture& arch, std::uint64_t seed) {
  if (arch.input_dim < 1 || arch.num_classes < 2) throw ShapeError("model needs D >= 1 and K >= 2");
  if (arch.kind == ModelKind::mlp && arch.hidden < 1) throw ShapeError("mlp needs hidden >= 1");
  GlobalModel m{arch, std::vector<double>(arch.parameter_count(), 0.0)};
  if (arch.kind == ModelKind::mlp) {
    Rng rng(derive_seed(seed, {0x1417ull}));
    const std::size_t d = arch.input_dim, h = arch.hidden, k = arch.num_classes;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (std::size_t i = 0; i < h * d; ++i) m.params[i] = (2.0 * uniform01(rng) - 1.0) * s1;
    const std::size_t w2 = h * d + h;
    for (std::size_t i = 0; i < k * h; ++i) m.params[w2 + i] = (2.0 * uniform01(rng) - 1.0) * s2;
  }
  return m;
}

namespace {

void softmax_in_place(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

void check_shapes(const GlobalModel& model, std::span<const double> x) {
  if (model.params.size() != model.arch.parameter_count())
    throw ShapeError("parameter vector length does not match the architecture");
  if (x.size() != model.arch.input_dim)
    throw ShapeError("feature dimension " + std::to_string(x.size()) + " != model dimension " +
                     std::to_string(model.arch.input_dim));
}

// Forward pass. Fills hidden activations for mlp; returns class probabilities.
std::vector<double> forward(const GlobalModel& model, std::span<const double> x,
                            std::vector<double>* hidden_out) {
  check_shapes(model, x);
  const auto& a = model.arch;
  const auto& p = model.params;
  const std::size_t d = a.input_dim, k = a.num_classes;
  std::vector<double> logits(k);
  if (a.kind == ModelKind::logistic) {
    for (std::size_t c = 0; c < k; ++c) {
      double z = p[k * d + c];
      for (std::size_t j = 0; j < d; ++j) z += p[c * d + j] * x[j];
      logits[c] = z;
    }
  } else {
    const std::size_t h = a.hidden;
    std::vector<double> hid(h);
    for (std::size_t u = 0; u < h; ++u) {
      double z = p[h * d + u];
      for (std::size_t j = 0; j < d; ++j) z += p[u * d + j] * x[j];
      hid[u] = std::tanh(z);
    }
    const std::size_t w2 = h * d + h, b2 = w2 + k * h;
    for (std::size_t c = 0; c < k; ++c) {
      double z = p[b2 + c];
      for (std::size_t u = 0; u < h; ++u) z += p[w2 + c * h + u] * hid[u];
      logits[c] = z;
    }
    if (hidden_out) *hidden_out = std::move(hid);
  }
  softmax_in_place(logits);
  return logits;
}

}  // namespace

LossGradient loss_and_gradient(const GlobalModel& model, std::span<const FeatureExample> batch) {
  if (batch.empty()) throw ShapeError("loss_and_gradient needs a non-empty batch");
  const auto& a = model.arch;
  const auto& p = model.params;
  const std::size_t d = a.input_dim, k = a.num_classes, h = a.hidden;
  LossGradient out{0.0, std::vector<double>(p.size(), 0.0)};
  auto& g = out.gradient;
  std::vector<double> hid;
  std::vector<double> delta(k);
  for (const auto& ex : batch) {
    if (ex.y >= k) throw ShapeError("label index out of range");
    auto prob = forward(model, ex.x, &hid);
    out.loss -= std::log(std::max(prob[ex.y], 1e-300));
    for (std::size_t c = 0; c < k; ++c) delta[c] = prob[c] - (c == ex.y ? 1.0 : 0.0);
    if (a.kind == ModelKind::logistic) {
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < d; ++j) g[c * d + j] += delta[c] * ex.x[j];
        g[k * d + c] += delta[c];
      }
    } else {
      const std::size_t w2 = h * d + h, b2 = w2 + k * h;
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t u = 0; u < h; ++u) g[w2 + c * h + u] += delta[c] * hid[u];
        g[b2 + c] += delta[c];
      }
      for (std::size_t u = 0; u < h; ++u) {
        double back = 0.0;
        for (std::size_t c = 0; c < k; ++c) back += delta[c] * p[w2 + c * h + u];
        back *= 1.0 - hid[u] * hid[u];
        for (std::size_t j = 0; j < d; ++j) g[u * d + j] += back * ex.x[j];
        g[h * d + u] += back;
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (auto& v : g) v *= inv;
  return out;
}

double mean_loss(const GlobalModel& model, std::span<const FeatureExample> batch) {
  if (batch.empty()) throw ShapeError("mean_loss needs a non-empty batch");
  double total = 0.0;
  for (const auto& ex : batch) total -= std::log(std::max(forward(model, ex.x, nullptr)[ex.y], 1e-300));
  return total / static_cast<double>(batch.size());
}

std::vector<double> predict_proba(const GlobalModel& model, std::span<const double> x) {
  return forward(model, x, nullptr);
}

std::size_t predict(const GlobalModel& model, std::span<const double> x) {
  auto prob = forward(model, x, nullptr);
  return static_cast<std::size_t>(std::max_element(prob.begin(), prob.end()) - prob.begin());
}

double accuracy(const GlobalModel& model, std::span<const FeatureExample> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) correct += predict(model, ex.x) == ex.y ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace focus
