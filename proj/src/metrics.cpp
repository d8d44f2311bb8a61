#include "otl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace otl {

ConfusionCounts confusion(std::span<const double> scores, std::span<const bool> labels, double threshold) {
  if (scores.size() != labels.size()) throw std::invalid_argument("confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i]) ++c.tp;
    if (predicted && !labels[i]) ++c.fp;
    if (!predicted && !labels[i]) ++c.tn;
    if (!predicted && labels[i]) ++c.fn;
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0) throw std::invalid_argument("accuracy: negative count");
  if (c.total() == 0) throw std::invalid_argument("accuracy: empty confusion table");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

std::optional<double> precision(const ConfusionCounts& c) {
  if (c.tp + c.fp <= 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

std::optional<double> sensitivity(const ConfusionCounts& c) {
  if (c.tp + c.fn <= 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double auroc(std::span<const double> scores, std::span<const bool> labels) {
  const std::size_t n = scores.size();
  if (labels.size() != n) throw std::invalid_argument("auroc: length mismatch");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of midranks (1-based) over positives.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("auroc: both classes must be present");
  const double p = static_cast<double>(positives);
  const double q = static_cast<double>(negatives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

std::optional<double> relative_improvement(double metric_tl, double metric_direct) {
  if (metric_direct == 0.0 || !std::isfinite(metric_direct) || !std::isfinite(metric_tl)) return std::nullopt;
  return (metric_tl - metric_direct) / metric_direct * 100.0;
}

}  // namespace otl
