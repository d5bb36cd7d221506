#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "oppi/num/tensor.hpp"

namespace oppi::num {

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every element of x.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, T h) {
  if (!(h > T{0})) throw std::invalid_argument("finite_diff_grad: step must be positive");
  Tensor<T> probe = x;
  Tensor<T> grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T original = probe[i];
    probe[i] = original + h;
    const T up = f(probe);
    probe[i] = original - h;
    const T down = f(probe);
    probe[i] = original;
    grad[i] = (up - down) / (T{2} * h);
  }
  return grad;
}

/// Gradients whose magnitudes are both below this are compared absolutely; the central
/// difference of an O(1) loss carries ~1e-11 rounding noise at h = 1e-5.
inline constexpr double kGradCheckFloor = 1e-6;

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
template <typename T>
double max_relative_error(const Tensor<T>& analytic, const Tensor<T>& numeric,
                          double floor = kGradCheckFloor) {
  if (analytic.shape() != numeric.shape()) {
    throw std::invalid_argument("max_relative_error: shape mismatch " + shape_str(analytic.shape()) +
                                " vs " + shape_str(numeric.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = static_cast<double>(analytic[i]);
    const double n = static_cast<double>(numeric[i]);
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace oppi::num
