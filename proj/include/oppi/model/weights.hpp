#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "oppi/model/config.hpp"
#include "oppi/num/tape.hpp"

namespace oppi::model {

/// Every trainable tensor of the encoder and both heads, in a fixed order:
///   embed.token [vocab x d], embed.position [max_len x d],
///   enc.layer{i}.{mha.wq, mha.wk, mha.wv, mha.wo, ffn.w1, ffn.b1, ffn.w2, ffn.b2,
///                 ln1.gain, ln1.bias, ln2.gain, ln2.bias},
///   mlm.proj [d x vocab], ppi.dense [2d x 1], ppi.bias [1].
template <typename T>
class EncoderWeights {
 public:
  static constexpr std::size_t kPerLayer = 12;
  enum LayerSlot : std::size_t {
    kWq, kWk, kWv, kWo, kFfnW1, kFfnB1, kFfnW2, kFfnB2, kLn1Gain, kLn1Bias, kLn2Gain, kLn2Bias
  };

  /// Glorot-uniform matrices, uniform(-0.05, 0.05) embeddings, zero biases, unit gains.
  EncoderWeights(const EncoderConfig& config, std::uint64_t seed);

  /// Adopts already-built parameters; names and shapes must match the layout above.
  EncoderWeights(const EncoderConfig& config, std::vector<num::Parameter<T>> params);

  const EncoderConfig& config() const noexcept { return config_; }

  std::vector<num::Parameter<T>>& params() noexcept { return params_; }
  const std::vector<num::Parameter<T>>& params() const noexcept { return params_; }

  num::Parameter<T>& token_embedding() { return params_[0]; }
  num::Parameter<T>& position_embedding() { return params_[1]; }
  num::Parameter<T>& layer(std::size_t l, LayerSlot slot) { return params_[2 + l * kPerLayer + slot]; }
  const num::Parameter<T>& layer(std::size_t l, LayerSlot slot) const {
    return params_[2 + l * kPerLayer + slot];
  }
  num::Parameter<T>& mlm_projection() { return params_[params_.size() - 3]; }
  num::Parameter<T>& ppi_dense() { return params_[params_.size() - 2]; }
  num::Parameter<T>& ppi_bias() { return params_[params_.size() - 1]; }

  /// Throws std::out_of_range for an unknown name.
  num::Parameter<T>& find(std::string_view name);
  const num::Parameter<T>& find(std::string_view name) const;

  void zero_grad();
  std::size_t parameter_count() const;

  template <typename U>
  EncoderWeights<U> cast() const {
    std::vector<num::Parameter<U>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.emplace_back(p.name, p.value.template cast<U>());
    return EncoderWeights<U>(config_, std::move(out));
  }

  /// Names and shapes in layout order for a config.
  static std::vector<std::pair<std::string, num::Shape>> layout(const EncoderConfig& config);

 private:
  EncoderConfig config_;
  std::vector<num::Parameter<T>> params_;
};

/// Parameters of one encoder layer bound to a tape.
template <typename T>
struct LayerVars {
  num::Var<T> wq, wk, wv, wo;
  num::Var<T> ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  num::Var<T> ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

/// All weights as tape variables.
template <typename T>
struct BoundWeights {
  EncoderConfig config;
  num::Var<T> token_embedding, position_embedding;
  std::vector<LayerVars<T>> layers;
  num::Var<T> mlm_projection, ppi_dense, ppi_bias;
};

/// Binds as differentiable leaves; backward accumulates into the parameters' grads.
template <typename T>
BoundWeights<T> bind(num::Tape<T>& tape, EncoderWeights<T>& weights);

/// Binds as read-only views (inference).
template <typename T>
BoundWeights<T> bind_const(num::Tape<T>& tape, const EncoderWeights<T>& weights);

}  // namespace oppi::model
