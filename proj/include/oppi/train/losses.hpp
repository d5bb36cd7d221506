#pragma once

#include <cstdint>
#include <span>

#include "oppi/num/ops.hpp"
#include "oppi/train/masking.hpp"

namespace oppi::train {

/// Mean cross-entropy over positions whose label is not kIgnoreLabel. Throws
/// std::invalid_argument when nothing is labelled.
template <typename T>
num::Var<T> mlm_loss(num::Var<T> logits, std::span<const std::int32_t> labels) {
  return num::masked_cross_entropy(logits, labels, kIgnoreLabel);
}

/// Mean binary cross-entropy of probabilities against 0/1 labels.
template <typename T>
num::Var<T> ppi_loss(num::Var<T> scores, std::span<const int> labels) {
  return num::binary_cross_entropy(scores, labels);
}

/// Scalar form, -mean(y ln p + (1 - y) ln(1 - p)); only the term selected by the label
/// is evaluated, so p == y gives exactly 0.
double ppi_loss(std::span<const double> scores, std::span<const int> labels);

}  // namespace oppi::train
