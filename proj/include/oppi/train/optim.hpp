#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "oppi/num/tensor.hpp"

namespace oppi::train {

/// Applies one update to every parameter from its accumulated grad.
template <typename T>
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::vector<num::Parameter<T>>& params) = 0;
};

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;  // added to sqrt(v_hat), outside the root

  void validate() const;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::vector<num::Tensor<T>> m, v;  // lazily shaped like the parameters on the first step
  std::uint64_t t = 0;
};

/// Bias-corrected Adam: w -= alpha * m_hat / (sqrt(v_hat) + eps).
template <typename T>
void adam_step(std::vector<num::Parameter<T>>& params, AdamState<T>& state);

template <typename T>
class Adam final : public Optimizer<T> {
 public:
  explicit Adam(AdamConfig config = {}) { state_.config = config; }
  void step(std::vector<num::Parameter<T>>& params) override { adam_step(params, state_); }
  const AdamState<T>& state() const noexcept { return state_; }

 private:
  AdamState<T> state_;
};

/// w -= lr * g.
template <typename T>
class Sgd final : public Optimizer<T> {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(std::vector<num::Parameter<T>>& params) override;

 private:
  double lr_;
};

struct SamConfig {
  double rho = 0.05;
  double guard = 1e-12;  // keeps the scale finite when the gradient vanishes

  void validate() const;
};

struct SamStats {
  double loss = 0;               // at the unperturbed weights
  double grad_norm = 0;          // global L2 norm of g over all parameters
  double perturbation_norm = 0;  // rho * |g| / (|g| + guard)
};

/// Evaluates the loss at the current weights and adds its gradient into each
/// parameter's grad (which the caller of the closure has zeroed).
using LossClosure = std::function<double()>;

/// Global L2 norm of all grads, accumulated in double.
template <typename T>
double grad_norm(const std::vector<num::Parameter<T>>& params);

/// Sharpness-aware step: g at w, ascend to w + rho g/(|g| + guard), take G there,
/// restore w exactly, then hand G to the optimizer.
template <typename T>
SamStats sam_step(std::vector<num::Parameter<T>>& params, const LossClosure& closure, const SamConfig& sam,
                  Optimizer<T>& optimizer);

/// Ordinary step: one gradient, one optimizer update. Returns the loss.
template <typename T>
double plain_step(std::vector<num::Parameter<T>>& params, const LossClosure& closure, Optimizer<T>& optimizer);

}  // namespace oppi::train
