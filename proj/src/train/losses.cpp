#include "oppi/train/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace oppi::train {

double ppi_loss(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("ppi_loss: " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(labels.size()) + " labels");
  }
  double total = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    total -= labels[i] == 1 ? std::log(scores[i]) : std::log1p(-scores[i]);
  }
  return total / static_cast<double>(scores.size());
}

}  // namespace oppi::train
