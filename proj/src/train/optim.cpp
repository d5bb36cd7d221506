#include "oppi/train/optim.hpp"

#include <cmath>
#include <string>

#include "oppi/error.hpp"

namespace oppi::train {

void AdamConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("adam alpha must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("adam eps must be positive");
}

void SamConfig::validate() const {
  if (!(rho > 0.0)) throw ConfigError("sam rho must be positive");
  if (!(guard > 0.0)) throw ConfigError("sam guard must be positive");
}

template <typename T>
void adam_step(std::vector<num::Parameter<T>>& params, AdamState<T>& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value.shape());
      state.v.emplace_back(p.value.shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                                std::to_string(params.size()));
  }
  ++state.t;
  const auto& c = state.config;
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(c.beta1, static_cast<double>(state.t)));
  const T c2 = static_cast<T>(1.0 - std::pow(c.beta2, static_cast<double>(state.t)));
  const T alpha = static_cast<T>(c.alpha), eps = static_cast<T>(c.eps);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto g = params[i].grad.data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    if (m.size() != w.size()) throw std::invalid_argument("adam moment shape mismatch for " + params[i].name);
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = b1 * m[k] + (T{1} - b1) * g[k];
      v[k] = b2 * v[k] + (T{1} - b2) * g[k] * g[k];
      const T m_hat = m[k] / c1;
      const T v_hat = v[k] / c2;
      w[k] -= alpha * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <typename T>
void Sgd<T>::step(std::vector<num::Parameter<T>>& params) {
  const T lr = static_cast<T>(lr_);
  for (auto& p : params) {
    auto w = p.value.data();
    auto g = p.grad.data();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * g[k];
  }
}

template <typename T>
double grad_norm(const std::vector<num::Parameter<T>>& params) {
  double sq = 0;
  for (const auto& p : params) {
    for (T g : p.grad.data()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sq);
}

namespace {

template <typename T>
void zero_all(std::vector<num::Parameter<T>>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace

template <typename T>
SamStats sam_step(std::vector<num::Parameter<T>>& params, const LossClosure& closure, const SamConfig& sam,
                  Optimizer<T>& optimizer) {
  SamStats stats;
  zero_all(params);
  stats.loss = closure();
  stats.grad_norm = grad_norm(params);
  const double scale = sam.rho / (stats.grad_norm + sam.guard);
  stats.perturbation_norm = scale * stats.grad_norm;

  std::vector<num::Tensor<T>> saved;
  saved.reserve(params.size());
  const T s = static_cast<T>(scale);
  for (auto& p : params) {
    saved.push_back(p.value);
    auto w = p.value.data();
    auto g = p.grad.data();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += s * g[k];
  }

  zero_all(params);
  closure();
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = std::move(saved[i]);
  optimizer.step(params);
  return stats;
}

template <typename T>
double plain_step(std::vector<num::Parameter<T>>& params, const LossClosure& closure, Optimizer<T>& optimizer) {
  zero_all(params);
  const double loss = closure();
  optimizer.step(params);
  return loss;
}

#define OPPI_INSTANTIATE_OPTIM(T)                                                                           \
  template void adam_step(std::vector<num::Parameter<T>>&, AdamState<T>&);                                  \
  template class Sgd<T>;                                                                                    \
  template double grad_norm(const std::vector<num::Parameter<T>>&);                                         \
  template SamStats sam_step(std::vector<num::Parameter<T>>&, const LossClosure&, const SamConfig&, Optimizer<T>&); \
  template double plain_step(std::vector<num::Parameter<T>>&, const LossClosure&, Optimizer<T>&);

OPPI_INSTANTIATE_OPTIM(float)
OPPI_INSTANTIATE_OPTIM(double)

#undef OPPI_INSTANTIATE_OPTIM

}  // namespace oppi::train
