#include <vector>

#include <fmt/format.h>

#include "tcal/eval.hpp"

namespace tcal {

namespace {

void require_pairs(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorKind::InvalidDimension,
                fmt::format("{} predictions for {} gold labels", predicted.size(), gold.size()));
  }
  if (gold.empty()) throw Error(ErrorKind::EmptyBatch, "metric over zero examples");
}

}  // namespace

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
  require_pairs(predicted, gold);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predicted[i] == gold[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(gold.size());
}

double macro_f1(std::span<const std::size_t> predicted, std::span<const std::size_t> gold, std::size_t num_labels) {
  require_pairs(predicted, gold);
  std::vector<double> tp(num_labels, 0.0), fp(num_labels, 0.0), fn(num_labels, 0.0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] >= num_labels || gold[i] >= num_labels) {
      throw Error(ErrorKind::InvalidDimension, "label index outside the label space");
    }
    if (predicted[i] == gold[i]) {
      tp[gold[i]] += 1.0;
    } else {
      fp[predicted[i]] += 1.0;
      fn[gold[i]] += 1.0;
    }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < num_labels; ++k) {
    // F1 = 2TP / (2TP + FP + FN); zero when the class never appears.
    const double denom = 2.0 * tp[k] + fp[k] + fn[k];
    total += denom > 0.0 ? 2.0 * tp[k] / denom : 0.0;
  }
  return 100.0 * total / static_cast<double>(num_labels);
}

double compute_metric(MetricKind metric, std::span<const std::size_t> predicted, std::span<const std::size_t> gold,
                      std::size_t num_labels) {
  return metric == MetricKind::Accuracy ? accuracy(predicted, gold) : macro_f1(predicted, gold, num_labels);
}

}  // namespace tcal
