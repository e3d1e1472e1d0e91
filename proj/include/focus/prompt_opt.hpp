#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "focus/fm.hpp"

namespace focus {

/// Arithmetic mean of class_scores over the content-free inputs.
Distribution estimate_content_free(const FoundationModel& fm, const Context& context,
                                   std::span<const std::string> classes,
                                   std::span<const std::string> cf_inputs);

/// q = softmax(W p + b). W is stored row-major, m x m.
struct Calibrator {
  std::size_t m = 0;
  std::vector<double> W;
  std::vector<double> b;
  Distribution p_cf;

  double w(std::size_t r, std::size_t c) const { return W[r * m + c]; }
  Distribution apply(std::span<const double> p) const;
};

/// W = diag(1 / p_cf), b = 0. Throws DegenerateEstimate on a non-positive component.
Calibrator build_calibrator(std::span<const double> p_cf);

/// Scaled identity: W = c I, b = 0.
Calibrator scaled_identity_calibrator(std::size_t m, double c);

Distribution calibrate(const Calibrator& calibrator, std::span<const double> p);

/// Picks `indices` out of `p` and renormalizes.
Distribution restrict_distribution(std::span<const double> p, std::span<const std::size_t> indices);

struct LabelGrouping {
  std::vector<std::vector<std::size_t>> groups;  // schema indices
  std::size_t group_size = 0;
  std::uint64_t seed = 0;

  void validate(std::size_t num_labels) const;
};

/// Seeded random partition into ceil(L/g) groups; the last one holds the remainder.
/// Within a group, labels are kept in schema order.
LabelGrouping partition_label_groups(std::size_t num_labels, std::size_t g, std::uint64_t seed);

/// Per-group argmax, then one runoff over the group winners.
/// With `p_cf`, each stage is calibrated with the matching slice of p_cf.
/// Issues groups + 1 scorer calls, or a single call when there is one group.
std::size_t decomposed_classify(const FoundationModel& fm, const LabelGrouping& grouping,
                                std::span<const std::string> classes, const Context& context,
                                std::string_view input, const Distribution* p_cf = nullptr);

/// Direct argmax over the full schema, optionally calibrated.
std::size_t direct_classify(const FoundationModel& fm, std::span<const std::string> classes,
                            const Context& context, std::string_view input,
                            const Calibrator* calibrator = nullptr);

}  // namespace focus
