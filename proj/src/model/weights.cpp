#include "oppi/model/weights.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "oppi/num/rng.hpp"

namespace oppi::model {

namespace {

const char* const kLayerSlotNames[] = {"mha.wq", "mha.wk", "mha.wv", "mha.wo",
                                       "ffn.w1", "ffn.b1", "ffn.w2", "ffn.b2",
                                       "ln1.gain", "ln1.bias", "ln2.gain", "ln2.bias"};

enum class Init { kGlorot, kEmbedding, kZero, kOne };

Init init_for(const std::string& name) {
  if (name.starts_with("embed.")) return Init::kEmbedding;
  if (name.ends_with(".gain")) return Init::kOne;
  if (name.ends_with(".bias") || name.ends_with(".b1") || name.ends_with(".b2")) return Init::kZero;
  return Init::kGlorot;
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, num::Shape>> EncoderWeights<T>::layout(const EncoderConfig& c) {
  const std::size_t d = c.d_model;
  std::vector<std::pair<std::string, num::Shape>> out;
  out.emplace_back("embed.token", num::Shape{c.vocab_size, d});
  out.emplace_back("embed.position", num::Shape{c.max_len, d});
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const std::string prefix = "enc.layer" + std::to_string(l) + ".";
    const num::Shape shapes[kPerLayer] = {{d, d}, {d, d}, {d, d}, {d, d},
                                          {d, c.ffn_hidden}, {c.ffn_hidden}, {c.ffn_hidden, d}, {d},
                                          {d}, {d}, {d}, {d}};
    for (std::size_t s = 0; s < kPerLayer; ++s) out.emplace_back(prefix + kLayerSlotNames[s], shapes[s]);
  }
  out.emplace_back("mlm.proj", num::Shape{d, c.vocab_size});
  out.emplace_back("ppi.dense", num::Shape{2 * d, 1});
  out.emplace_back("ppi.bias", num::Shape{1});
  return out;
}

template <typename T>
EncoderWeights<T>::EncoderWeights(const EncoderConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const num::CounterRng root(seed, 0x7765696768747300ULL);
  const auto entries = layout(config_);
  params_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [name, shape] = entries[i];
    num::Tensor<T> value(shape);
    auto rng = root.fork(i);
    switch (init_for(name)) {
      case Init::kGlorot: {
        const double fan_in = static_cast<double>(shape[0]);
        const double fan_out = static_cast<double>(shape.size() > 1 ? shape[1] : 1);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : value.data()) v = static_cast<T>((2.0 * rng.uniform() - 1.0) * limit);
        break;
      }
      case Init::kEmbedding:
        for (auto& v : value.data()) v = static_cast<T>((2.0 * rng.uniform() - 1.0) * 0.05);
        break;
      case Init::kZero:
        break;
      case Init::kOne:
        value.fill(T{1});
        break;
    }
    params_.emplace_back(name, std::move(value));
  }
}

template <typename T>
EncoderWeights<T>::EncoderWeights(const EncoderConfig& config, std::vector<num::Parameter<T>> params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  const auto entries = layout(config_);
  if (entries.size() != params_.size()) {
    throw std::invalid_argument("expected " + std::to_string(entries.size()) + " parameters, got " +
                                std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (params_[i].name != entries[i].first || params_[i].value.shape() != entries[i].second) {
      throw std::invalid_argument("parameter " + std::to_string(i) + " is " + params_[i].name + " " +
                                  num::shape_str(params_[i].value.shape()) + ", expected " + entries[i].first +
                                  " " + num::shape_str(entries[i].second));
    }
  }
}

template <typename T>
num::Parameter<T>& EncoderWeights<T>::find(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

template <typename T>
const num::Parameter<T>& EncoderWeights<T>::find(std::string_view name) const {
  return const_cast<EncoderWeights*>(this)->find(name);
}

template <typename T>
void EncoderWeights<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
std::size_t EncoderWeights<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

namespace {

template <typename T, typename Leaf>
BoundWeights<T> bind_with(const EncoderConfig& config, std::size_t count, Leaf leaf) {
  BoundWeights<T> b;
  b.config = config;
  b.token_embedding = leaf(0);
  b.position_embedding = leaf(1);
  using W = EncoderWeights<T>;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t base = 2 + l * W::kPerLayer;
    LayerVars<T> v;
    v.wq = leaf(base + W::kWq);
    v.wk = leaf(base + W::kWk);
    v.wv = leaf(base + W::kWv);
    v.wo = leaf(base + W::kWo);
    v.ffn_w1 = leaf(base + W::kFfnW1);
    v.ffn_b1 = leaf(base + W::kFfnB1);
    v.ffn_w2 = leaf(base + W::kFfnW2);
    v.ffn_b2 = leaf(base + W::kFfnB2);
    v.ln1_gain = leaf(base + W::kLn1Gain);
    v.ln1_bias = leaf(base + W::kLn1Bias);
    v.ln2_gain = leaf(base + W::kLn2Gain);
    v.ln2_bias = leaf(base + W::kLn2Bias);
    b.layers.push_back(v);
  }
  b.mlm_projection = leaf(count - 3);
  b.ppi_dense = leaf(count - 2);
  b.ppi_bias = leaf(count - 1);
  return b;
}

}  // namespace

template <typename T>
BoundWeights<T> bind(num::Tape<T>& tape, EncoderWeights<T>& weights) {
  auto& params = weights.params();
  return bind_with<T>(weights.config(), params.size(),
                      [&](std::size_t i) { return tape.parameter(params[i]); });
}

template <typename T>
BoundWeights<T> bind_const(num::Tape<T>& tape, const EncoderWeights<T>& weights) {
  const auto& params = weights.params();
  return bind_with<T>(weights.config(), params.size(),
                      [&](std::size_t i) { return tape.view(params[i].value); });
}

template class EncoderWeights<float>;
template class EncoderWeights<double>;
template BoundWeights<float> bind(num::Tape<float>&, EncoderWeights<float>&);
template BoundWeights<double> bind(num::Tape<double>&, EncoderWeights<double>&);
template BoundWeights<float> bind_const(num::Tape<float>&, const EncoderWeights<float>&);
template BoundWeights<double> bind_const(num::Tape<double>&, const EncoderWeights<double>&);

}  // namespace oppi::model
