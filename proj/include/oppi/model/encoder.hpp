#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oppi/model/weights.hpp"
#include "oppi/num/ops.hpp"
#include "oppi/seqcore/tokens.hpp"

namespace oppi::model {

/// Classification threshold on ppi_score.
inline constexpr double kDecisionThreshold = 0.5;

/// Row-stochastic weights softmax(q k^T / sqrt(d_k) + mask) where masked keys get -1e9.
/// Nonzero `key_masked[j]` excludes key j.
template <typename T>
num::Var<T> attention_weights(num::Var<T> q, num::Var<T> k, std::span<const std::uint8_t> key_masked);

/// attention_weights(q, k, mask) . v
template <typename T>
num::Var<T> scaled_dot_attention(num::Var<T> q, num::Var<T> k, num::Var<T> v,
                                 std::span<const std::uint8_t> key_masked);

/// Per head h: attention(x Wq_h, x Wk_h, x Wv_h); heads concatenated then projected by Wo.
template <typename T>
num::Var<T> multi_head_attention(num::Var<T> x, const LayerVars<T>& layer, std::size_t num_heads,
                                 std::span<const std::uint8_t> key_masked);

/// Post-norm block: x1 = LN(x + Dropout(MHA(x))); out = LN(x1 + Dropout(FFN(x1))).
template <typename T>
num::Var<T> encoder_layer(num::Var<T> x, const LayerVars<T>& layer, const EncoderConfig& config,
                          std::span<const std::uint8_t> key_masked, bool training, num::CounterRng& rng);

/// Token + position embeddings, dropout, then every encoder layer. PAD keys are masked.
/// Output is [tokens.max_len() x d_model]; tokens.max_len() may not exceed config.max_len.
template <typename T>
num::Var<T> encode(const seq::TokenSequence& tokens, const BoundWeights<T>& weights, bool training,
                   num::CounterRng& rng);

/// Per-position vocabulary logits [n x vocab].
template <typename T>
num::Var<T> mlm_logits(num::Var<T> encoded, const BoundWeights<T>& weights);

/// Pre-sigmoid PPI logit [1 x 1] from two pooled (CLS) rows.
template <typename T>
num::Var<T> ppi_logit(num::Var<T> virus_cls, num::Var<T> host_cls, const BoundWeights<T>& weights);

/// CLS row of encode() at inference, [1 x d_model].
template <typename T>
num::Tensor<T> encode_cls(const seq::TokenSequence& tokens, const EncoderWeights<T>& weights);

/// sigmoid(ppi_logit) from already-pooled CLS rows at inference. The sigmoid is taken in
/// double precision and clamped into the open interval (0, 1).
template <typename T>
double ppi_score_from_cls(const num::Tensor<T>& virus_cls, const num::Tensor<T>& host_cls,
                     const EncoderWeights<T>& weights);

/// Binding score in (0, 1); inference mode. Higher means stronger predicted binding.
template <typename T>
double ppi_score(const seq::TokenSequence& virus, const seq::TokenSequence& host,
            const EncoderWeights<T>& weights);

/// 1 where the token is PAD, else 0.
std::vector<std::uint8_t> pad_mask(const seq::TokenSequence& tokens);

}  // namespace oppi::model
