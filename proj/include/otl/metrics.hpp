#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace otl {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
};

/// Hard predictions `scores >= threshold` against boolean labels.
ConfusionCounts confusion(std::span<const double> scores, std::span<const bool> labels, double threshold);

/// (tp + tn) / total; throws std::invalid_argument on an empty table.
double accuracy(const ConfusionCounts& c);
/// tp / (tp + fp); empty when nothing was reported positive.
std::optional<double> precision(const ConfusionCounts& c);
/// tp / (tp + fn); empty when there are no actual positives.
std::optional<double> sensitivity(const ConfusionCounts& c);

/// Probability that a random positive outscores a random negative, ties
/// counted one half (Mann-Whitney). Throws std::invalid_argument unless both
/// classes are present.
double auroc(std::span<const double> scores, std::span<const bool> labels);

/// (metric_tl - metric_direct) / metric_direct * 100; empty when the
/// direct metric is zero.
std::optional<double> relative_improvement(double metric_tl, double metric_direct);

}  // namespace otl
