#include "oppi/model/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace oppi::model {

using num::Var;

std::vector<std::uint8_t> pad_mask(const seq::TokenSequence& tokens) {
  std::vector<std::uint8_t> mask(tokens.max_len());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = tokens[i] == seq::TokenVocab::kPad ? 1 : 0;
  return mask;
}

template <typename T>
Var<T> attention_weights(Var<T> q, Var<T> k, std::span<const std::uint8_t> key_masked) {
  if (q.value().cols() != k.value().cols()) {
    throw std::invalid_argument("attention: query " + num::shape_str(q.shape()) + " and key " +
                                num::shape_str(k.shape()) + " widths differ");
  }
  if (key_masked.size() != k.value().rows()) {
    throw std::invalid_argument("attention: mask length " + std::to_string(key_masked.size()) +
                                " does not match " + std::to_string(k.value().rows()) + " keys");
  }
  const T inv_sqrt_dk = T{1} / std::sqrt(static_cast<T>(k.value().cols()));
  std::vector<T> offsets(key_masked.size());
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    offsets[j] = key_masked[j] ? static_cast<T>(num::kMaskedLogit) : T{0};
  }
  auto logits = num::scale(num::matmul_nt(q, k), inv_sqrt_dk);
  return num::softmax(num::add_row_constant<T>(logits, offsets), 1);
}

template <typename T>
Var<T> scaled_dot_attention(Var<T> q, Var<T> k, Var<T> v, std::span<const std::uint8_t> key_masked) {
  if (v.value().rows() != k.value().rows()) {
    throw std::invalid_argument("attention: key " + num::shape_str(k.shape()) + " and value " +
                                num::shape_str(v.shape()) + " row counts differ");
  }
  return num::matmul(attention_weights(q, k, key_masked), v);
}

template <typename T>
Var<T> multi_head_attention(Var<T> x, const LayerVars<T>& layer, std::size_t num_heads,
                            std::span<const std::uint8_t> key_masked) {
  const std::size_t d = x.value().cols();
  if (layer.wq.value().rows() != d) {
    throw std::invalid_argument("multi_head_attention: input " + num::shape_str(x.shape()) +
                                " does not match W_Q " + num::shape_str(layer.wq.shape()));
  }
  if (num_heads == 0 || d % num_heads != 0) {
    throw std::invalid_argument("multi_head_attention: width " + std::to_string(d) +
                                " not divisible into " + std::to_string(num_heads) + " heads");
  }
  const std::size_t dk = d / num_heads;
  auto q = num::matmul(x, layer.wq);
  auto k = num::matmul(x, layer.wk);
  auto v = num::matmul(x, layer.wv);
  std::vector<Var<T>> heads;
  heads.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    heads.push_back(scaled_dot_attention(num::slice_cols(q, h * dk, dk), num::slice_cols(k, h * dk, dk),
                                         num::slice_cols(v, h * dk, dk), key_masked));
  }
  auto joined = num_heads == 1 ? heads.front() : num::concat_cols<T>(heads);
  return num::matmul(joined, layer.wo);
}

template <typename T>
Var<T> encoder_layer(Var<T> x, const LayerVars<T>& layer, const EncoderConfig& config,
                     std::span<const std::uint8_t> key_masked, bool training, num::CounterRng& rng) {
  auto attended = num::dropout(multi_head_attention(x, layer, config.num_heads, key_masked), config.dropout,
                               training, rng);
  auto x1 = num::layer_norm(num::add(x, attended), layer.ln1_gain, layer.ln1_bias);
  auto hidden = num::gelu(num::add_bias(num::matmul(x1, layer.ffn_w1), layer.ffn_b1));
  auto ffn = num::add_bias(num::matmul(hidden, layer.ffn_w2), layer.ffn_b2);
  ffn = num::dropout(ffn, config.dropout, training, rng);
  return num::layer_norm(num::add(x1, ffn), layer.ln2_gain, layer.ln2_bias);
}

template <typename T>
Var<T> encode(const seq::TokenSequence& tokens, const BoundWeights<T>& weights, bool training,
              num::CounterRng& rng) {
  const auto& config = weights.config;
  const std::size_t n = tokens.max_len();
  if (n > config.max_len) {
    throw std::invalid_argument("token sequence of length " + std::to_string(n) + " exceeds model max_len " +
                                std::to_string(config.max_len));
  }
  const auto mask = pad_mask(tokens);
  auto x = num::add(num::embedding<T>(weights.token_embedding, tokens.ids()),
                    num::slice_rows(weights.position_embedding, 0, n));
  x = num::dropout(x, config.dropout, training, rng);
  for (const auto& layer : weights.layers) x = encoder_layer(x, layer, config, mask, training, rng);
  return x;
}

template <typename T>
Var<T> mlm_logits(Var<T> encoded, const BoundWeights<T>& weights) {
  return num::matmul(encoded, weights.mlm_projection);
}

template <typename T>
Var<T> ppi_logit(Var<T> virus_cls, Var<T> host_cls, const BoundWeights<T>& weights) {
  const Var<T> parts[] = {virus_cls, host_cls};
  return num::add_bias(num::matmul(num::concat_cols<T>(parts), weights.ppi_dense), weights.ppi_bias);
}

template <typename T>
num::Tensor<T> encode_cls(const seq::TokenSequence& tokens, const EncoderWeights<T>& weights) {
  num::Tape<T> tape(false);
  const auto bound = bind_const(tape, weights);
  num::CounterRng unused(0);
  return num::select_row(encode(tokens, bound, false, unused), 0).value();
}

template <typename T>
double ppi_score_from_cls(const num::Tensor<T>& virus_cls, const num::Tensor<T>& host_cls,
                          const EncoderWeights<T>& weights) {
  num::Tape<T> tape(false);
  const auto bound = bind_const(tape, weights);
  const double z = static_cast<double>(ppi_logit(tape.view(virus_cls), tape.view(host_cls), bound).value()[0]);
  const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

template <typename T>
double ppi_score(const seq::TokenSequence& virus, const seq::TokenSequence& host, const EncoderWeights<T>& weights) {
  return ppi_score_from_cls(encode_cls(virus, weights), encode_cls(host, weights), weights);
}

#define OPPI_INSTANTIATE_ENCODER(T)                                                                              \
  template Var<T> attention_weights(Var<T>, Var<T>, std::span<const std::uint8_t>);                              \
  template Var<T> scaled_dot_attention(Var<T>, Var<T>, Var<T>, std::span<const std::uint8_t>);                   \
  template Var<T> multi_head_attention(Var<T>, const LayerVars<T>&, std::size_t, std::span<const std::uint8_t>); \
  template Var<T> encoder_layer(Var<T>, const LayerVars<T>&, const EncoderConfig&, std::span<const std::uint8_t>, \
                                bool, num::CounterRng&);                                                          \
  template Var<T> encode(const seq::TokenSequence&, const BoundWeights<T>&, bool, num::CounterRng&);             \
  template Var<T> mlm_logits(Var<T>, const BoundWeights<T>&);                                                    \
  template Var<T> ppi_logit(Var<T>, Var<T>, const BoundWeights<T>&);                                             \
  template num::Tensor<T> encode_cls(const seq::TokenSequence&, const EncoderWeights<T>&);                       \
  template double ppi_score_from_cls(const num::Tensor<T>&, const num::Tensor<T>&, const EncoderWeights<T>&);    \
  template double ppi_score(const seq::TokenSequence&, const seq::TokenSequence&, const EncoderWeights<T>&);

OPPI_INSTANTIATE_ENCODER(float)
OPPI_INSTANTIATE_ENCODER(double)

#undef OPPI_INSTANTIATE_ENCODER

}  // namespace oppi::model
