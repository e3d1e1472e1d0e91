#include "focus/prompt_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "focus/errors.hpp"
#include "focus/random.hpp"

namespace focus {

Distribution estimate_content_free(const FoundationModel& fm, const Context& context,
                                   std::span<const std::string> classes,
                                   std::span<const std::string> cf_inputs) {
  if (cf_inputs.empty()) throw Error("content-free estimate needs at least one input");
  Distribution mean(classes.size(), 0.0);
  for (const auto& x : cf_inputs) {
    const auto p = fm.class_scores(context, x, classes);
    if (p.size() != mean.size()) throw ShapeError("class_scores size does not match the schema");
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
  }
  for (auto& v : mean) v /= static_cast<double>(cf_inputs.size());
  return mean;
}

Distribution Calibrator::apply(std::span<const double> p) const {
  if (p.size() != m) throw ShapeError("calibrator expects " + std::to_string(m) + " classes, got " +
                                      std::to_string(p.size()));
  std::vector<double> z(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double s = b[r];
    for (std::size_t c = 0; c < m; ++c) s += w(r, c) * p[c];
    z[r] = s;
  }
  return softmax(z);
}

Calibrator build_calibrator(std::span<const double> p_cf) {
  if (p_cf.empty()) throw ShapeError("empty content-free estimate");
  Calibrator cal;
  cal.m = p_cf.size();
  cal.W.assign(cal.m * cal.m, 0.0);
  cal.b.assign(cal.m, 0.0);
  cal.p_cf.assign(p_cf.begin(), p_cf.end());
  for (std::size_t i = 0; i < cal.m; ++i) {
    if (!(p_cf[i] > 0.0))
      throw DegenerateEstimate("content-free probability of class " + std::to_string(i) +
                               " is zero; add content-free inputs or smoothing");
    cal.W[i * cal.m + i] = 1.0 / p_cf[i];
  }
  return cal;
}

Calibrator scaled_identity_calibrator(std::size_t m, double c) {
  if (!(c > 0.0)) throw Error("identity scale must be positive");
  Calibrator cal;
  cal.m = m;
  cal.W.assign(m * m, 0.0);
  cal.b.assign(m, 0.0);
  cal.p_cf.assign(m, 1.0 / static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) cal.W[i * m + i] = c;
  return cal;
}

Distribution calibrate(const Calibrator& calibrator, std::span<const double> p) {
  return calibrator.apply(p);
}

Distribution restrict_distribution(std::span<const double> p,
                                   std::span<const std::size_t> indices) {
  Distribution out;
  out.reserve(indices.size());
  double total = 0.0;
  for (auto i : indices) {
    out.push_back(p[i]);
    total += p[i];
  }
  if (total > 0.0) {
    for (auto& v : out) v /= total;
  } else {
    for (auto& v : out) v = 1.0 / static_cast<double>(out.size());
  }
  return out;
}

void LabelGrouping::validate(std::size_t num_labels) const {
  std::vector<int> seen(num_labels, 0);
  for (const auto& g : groups) {
    if (g.empty()) throw Error("empty label group");
    if (group_size && g.size() > group_size) throw Error("label group larger than g");
    for (auto i : g) {
      if (i >= num_labels) throw ShapeError("label group index out of range");
      if (seen[i]++) throw Error("label groups overlap");
    }
  }
  if (std::count(seen.begin(), seen.end(), 0)) throw Error("label groups do not cover the schema");
}

LabelGrouping partition_label_groups(std::size_t num_labels, std::size_t g, std::uint64_t seed) {
  if (g < 2) throw Error("group size must be at least 2");
  if (num_labels == 0) throw ShapeError("cannot group an empty schema");
  LabelGrouping out;
  out.group_size = g;
  out.seed = seed;
  if (num_labels <= g) {
    std::vector<std::size_t> all(num_labels);
    std::iota(all.begin(), all.end(), 0);
    out.groups.push_back(std::move(all));
    return out;
  }
  Rng rng(derive_seed(seed, {0x6E0Bull}));
  const auto order = shuffled_indices(num_labels, rng);
  for (std::size_t start = 0; start < num_labels; start += g) {
    std::vector<std::size_t> group(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(std::min(start + g, num_labels)));
    std::sort(group.begin(), group.end());
    out.groups.push_back(std::move(group));
  }
  return out;
}

namespace {

std::size_t score_subset(const FoundationModel& fm, std::span<const std::string> classes,
                         const std::vector<std::size_t>& subset, const Context& context,
                         std::string_view input, const Distribution* p_cf) {
  std::vector<std::string> names;
  names.reserve(subset.size());
  for (auto i : subset) names.push_back(classes[i]);
  auto p = fm.class_scores(context, input, names);
  if (p_cf) p = build_calibrator(restrict_distribution(*p_cf, subset)).apply(p);
  return subset[argmax(p)];
}

}  // namespace

std::size_t decomposed_classify(const FoundationModel& fm, const LabelGrouping& grouping,
                                std::span<const std::string> classes, const Context& context,
                                std::string_view input, const Distribution* p_cf) {
  grouping.validate(classes.size());
  if (p_cf && p_cf->size() != classes.size())
    throw ShapeError("content-free estimate does not match the schema");
  std::vector<std::size_t> winners;
  winners.reserve(grouping.groups.size());
  for (const auto& group : grouping.groups)
    winners.push_back(score_subset(fm, classes, group, context, input, p_cf));
  if (winners.size() == 1) return winners.front();
  return score_subset(fm, classes, winners, context, input, p_cf);
}

std::size_t direct_classify(const FoundationModel& fm, std::span<const std::string> classes,
                            const Context& context, std::string_view input,
                            const Calibrator* calibrator) {
  auto p = fm.class_scores(context, input, classes);
  if (calibrator) p = calibrator->apply(p);
  return argmax(p);
}

}  // namespace focus
