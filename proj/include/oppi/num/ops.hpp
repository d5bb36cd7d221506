#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oppi/num/rng.hpp"
#include "oppi/num/tape.hpp"

/// Differentiable operations on Tape variables. All 2-D operations treat rank-1 tensors
/// as a single row. Shape mismatches throw std::invalid_argument naming both shapes.
namespace oppi::num {

/// Additive logit for masked attention keys.
inline constexpr double kMaskedLogit = -1e9;
inline constexpr double kLayerNormEps = 1e-6;

/// a [m x k] . b [k x n]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

/// a [m x k] . b^T where b is [n x k]
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

/// Elementwise product of equal shapes.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

/// x [n x d] + bias [d] broadcast over rows.
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias);

template <typename T>
Var<T> scale(Var<T> x, T factor);

/// x [n x m] + offsets [m] broadcast over rows; offsets are not differentiated.
template <typename T>
Var<T> add_row_constant(Var<T> x, std::span<const T> offsets);

/// Numerically stable softmax of a 2-D tensor along axis 0 (columns) or 1 (rows).
template <typename T>
Var<T> softmax(Var<T> x, int axis = 1);

/// Per-row (x - mean) / sqrt(var + eps) * gain + bias.
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps = static_cast<T>(kLayerNormEps));

/// Exact (erf) GELU.
template <typename T>
Var<T> gelu(Var<T> x);

template <typename T>
Var<T> sigmoid(Var<T> x);

/// Row gather table[ids]; backward scatters additively. Throws std::out_of_range on a bad id.
template <typename T>
Var<T> embedding(Var<T> table, std::span<const std::int32_t> ids);

/// Inverted dropout. Identity when !training or rate == 0.
template <typename T>
Var<T> dropout(Var<T> x, double rate, bool training, CounterRng& rng);

/// Columns [begin, begin + width) of a 2-D tensor.
template <typename T>
Var<T> slice_cols(Var<T> x, std::size_t begin, std::size_t width);

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts);

/// Row r as a [1 x d] tensor.
template <typename T>
Var<T> select_row(Var<T> x, std::size_t r);

/// Rows [begin, begin + count).
template <typename T>
Var<T> slice_rows(Var<T> x, std::size_t begin, std::size_t count);

/// Sum of all elements, shape [1].
template <typename T>
Var<T> sum(Var<T> x);

/// Mean of a non-empty list of scalars, shape [1].
template <typename T>
Var<T> mean_of(std::span<const Var<T>> scalars);

/// Mean cross-entropy over rows whose label is not `ignore`. Throws std::invalid_argument
/// when no row is labelled.
template <typename T>
Var<T> masked_cross_entropy(Var<T> logits, std::span<const std::int32_t> labels,
                            std::int32_t ignore = -1);

/// Mean binary cross-entropy of probabilities p against {0,1} labels.
template <typename T>
Var<T> binary_cross_entropy(Var<T> p, std::span<const int> labels);

/// Same loss computed from pre-sigmoid logits without forming log(0).
template <typename T>
Var<T> bce_with_logits(Var<T> logits, std::span<const int> labels);

}  // namespace oppi::num
