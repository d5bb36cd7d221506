#include "oppi/num/ops.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace oppi::num {

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                              shape_str(b));
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

template <typename T>
Tape<T>& tape_of(Var<T> v) {
  return *v.tape();
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.cols() != B.rows() || B.rank() != 2) shape_error("matmul", A.shape(), B.shape());
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor<T> C = Tensor<T>::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    T* c = C.raw() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = A.raw()[i * k + p];
      const T* brow = B.raw() + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
    }
  }
  return tape_of(a).record(std::move(C), {a, b}, [a, b, m, k, n](Tape<T>& tape, const Tensor<T>& g) {
    const auto& A = tape.value(a);
    const auto& B = tape.value(b);
    if (tape.requires_grad(a)) {
      auto& dA = tape.grad_ref(a);
      for (std::size_t i = 0; i < m; ++i) {
        const T* gi = g.raw() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const T* bp = B.raw() + p * n;
          T acc = 0;
          for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
          dA.raw()[i * k + p] += acc;
        }
      }
    }
    if (tape.requires_grad(b)) {
      auto& dB = tape.grad_ref(b);
      for (std::size_t i = 0; i < m; ++i) {
        const T* gi = g.raw() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const T av = A.raw()[i * k + p];
          T* dbp = dB.raw() + p * n;
          for (std::size_t j = 0; j < n; ++j) dbp[j] += av * gi[j];
        }
      }
    }
  });
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.cols() != B.cols()) shape_error("matmul_nt", A.shape(), B.shape());
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  Tensor<T> C = Tensor<T>::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = A.raw() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = B.raw() + j * k;
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      C.raw()[i * n + j] = acc;
    }
  }
  return tape_of(a).record(std::move(C), {a, b}, [a, b, m, k, n](Tape<T>& tape, const Tensor<T>& g) {
    const auto& A = tape.value(a);
    const auto& B = tape.value(b);
    if (tape.requires_grad(a)) {
      auto& dA = tape.grad_ref(a);
      for (std::size_t i = 0; i < m; ++i) {
        T* dai = dA.raw() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const T gij = g.raw()[i * n + j];
          const T* bj = B.raw() + j * k;
          for (std::size_t p = 0; p < k; ++p) dai[p] += gij * bj[p];
        }
      }
    }
    if (tape.requires_grad(b)) {
      auto& dB = tape.grad_ref(b);
      for (std::size_t i = 0; i < m; ++i) {
        const T* ai = A.raw() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const T gij = g.raw()[i * n + j];
          T* dbj = dB.raw() + j * k;
          for (std::size_t p = 0; p < k; ++p) dbj[p] += gij * ai[p];
        }
      }
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.shape() != B.shape()) shape_error("add", A.shape(), B.shape());
  Tensor<T> C = A;
  add_into(C, B);
  return tape_of(a).record(std::move(C), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
    if (tape.requires_grad(a)) add_into(tape.grad_ref(a), g);
    if (tape.requires_grad(b)) add_into(tape.grad_ref(b), g);
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.shape() != B.shape()) shape_error("mul", A.shape(), B.shape());
  Tensor<T> C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  return tape_of(a).record(std::move(C), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
    const auto& A = tape.value(a);
    const auto& B = tape.value(b);
    if (tape.requires_grad(a)) {
      auto& d = tape.grad_ref(a);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * B[i];
    }
    if (tape.requires_grad(b)) {
      auto& d = tape.grad_ref(b);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * A[i];
    }
  });
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
  const auto& X = x.value();
  const auto& B = bias.value();
  if (B.size() != X.cols()) shape_error("add_bias", X.shape(), B.shape());
  const std::size_t rows = X.rows(), cols = X.cols();
  Tensor<T> Y = X;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) Y.raw()[r * cols + c] += B[c];
  }
  return tape_of(x).record(std::move(Y), {x, bias}, [x, bias, rows, cols](Tape<T>& tape, const Tensor<T>& g) {
    if (tape.requires_grad(x)) add_into(tape.grad_ref(x), g);
    if (tape.requires_grad(bias)) {
      auto& db = tape.grad_ref(bias);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) db[c] += g.raw()[r * cols + c];
      }
    }
  });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Tensor<T> Y = x.value();
  for (auto& v : Y.data()) v *= factor;
  return tape_of(x).record(std::move(Y), {x}, [x, factor](Tape<T>& tape, const Tensor<T>& g) {
    auto& d = tape.grad_ref(x);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * g[i];
  });
}

template <typename T>
Var<T> add_row_constant(Var<T> x, std::span<const T> offsets) {
  const auto& X = x.value();
  if (offsets.size() != X.cols()) {
    shape_error("add_row_constant", X.shape(), Shape{offsets.size()});
  }
  const std::size_t rows = X.rows(), cols = X.cols();
  Tensor<T> Y = X;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) Y.raw()[r * cols + c] += offsets[c];
  }
  return tape_of(x).record(std::move(Y), {x}, [x](Tape<T>& tape, const Tensor<T>& g) {
    add_into(tape.grad_ref(x), g);
  });
}

template <typename T>
Var<T> softmax(Var<T> x, int axis) {
  const auto& X = x.value();
  if (axis != 0 && axis != 1) throw std::invalid_argument("softmax: axis must be 0 or 1");
  const std::size_t rows = X.rows(), cols = X.cols();
  // Lanes are the 1-D slices softmax normalises; stride walks along one lane.
  const std::size_t lanes = axis == 1 ? rows : cols;
  const std::size_t len = axis == 1 ? cols : rows;
  const std::size_t lane_step = axis == 1 ? cols : 1;
  const std::size_t stride = axis == 1 ? 1 : cols;
  Tensor<T> Y(X.shape());
  for (std::size_t l = 0; l < lanes; ++l) {
    const T* in = X.raw() + l * lane_step;
    T* out = Y.raw() + l * lane_step;
    T mx = in[0];
    for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, in[i * stride]);
    T total = 0;
    for (std::size_t i = 0; i < len; ++i) {
      out[i * stride] = std::exp(in[i * stride] - mx);
      total += out[i * stride];
    }
    for (std::size_t i = 0; i < len; ++i) out[i * stride] /= total;
  }
  const std::size_t out_id = tape_of(x).size();
  return tape_of(x).record(
      std::move(Y), {x}, [x, out_id, lanes, len, lane_step, stride](Tape<T>& tape, const Tensor<T>& g) {
        const auto& Y = tape.value(Var<T>(&tape, out_id));
        auto& dX = tape.grad_ref(x);
        for (std::size_t l = 0; l < lanes; ++l) {
          const T* y = Y.raw() + l * lane_step;
          const T* gy = g.raw() + l * lane_step;
          T* dx = dX.raw() + l * lane_step;
          T dot = 0;
          for (std::size_t i = 0; i < len; ++i) dot += gy[i * stride] * y[i * stride];
          for (std::size_t i = 0; i < len; ++i) dx[i * stride] += y[i * stride] * (gy[i * stride] - dot);
        }
      });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps) {
  const auto& X = x.value();
  const auto& G = gain.value();
  const auto& B = bias.value();
  const std::size_t rows = X.rows(), cols = X.cols();
  if (G.size() != cols) shape_error("layer_norm gain", X.shape(), G.shape());
  if (B.size() != cols) shape_error("layer_norm bias", X.shape(), B.shape());
  Tensor<T> Y(X.shape());
  std::vector<T> xhat(X.size());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = X.raw() + r * cols;
    T mean = 0;
    for (std::size_t c = 0; c < cols; ++c) mean += in[c];
    mean /= static_cast<T>(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= static_cast<T>(cols);
    const T inv = T{1} / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t c = 0; c < cols; ++c) {
      const T h = (in[c] - mean) * inv;
      xhat[r * cols + c] = h;
      Y.raw()[r * cols + c] = h * G[c] + B[c];
    }
  }
  return tape_of(x).record(
      std::move(Y), {x, gain, bias},
      [x, gain, bias, rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape<T>& tape, const Tensor<T>& g) {
        const auto& G = tape.value(gain);
        if (tape.requires_grad(gain)) {
          auto& dG = tape.grad_ref(gain);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) dG[c] += g.raw()[r * cols + c] * xhat[r * cols + c];
          }
        }
        if (tape.requires_grad(bias)) {
          auto& dB = tape.grad_ref(bias);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) dB[c] += g.raw()[r * cols + c];
          }
        }
        if (tape.requires_grad(x)) {
          auto& dX = tape.grad_ref(x);
          const T n = static_cast<T>(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            T sum_dh = 0, sum_dh_h = 0;
            for (std::size_t c = 0; c < cols; ++c) {
              const T dh = g.raw()[r * cols + c] * G[c];
              sum_dh += dh;
              sum_dh_h += dh * xhat[r * cols + c];
            }
            for (std::size_t c = 0; c < cols; ++c) {
              const T dh = g.raw()[r * cols + c] * G[c];
              dX.raw()[r * cols + c] +=
                  inv_std[r] / n * (n * dh - sum_dh - xhat[r * cols + c] * sum_dh_h);
            }
          }
        }
      });
}

template <typename T>
Var<T> gelu(Var<T> x) {
  const auto& X = x.value();
  Tensor<T> Y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const T v = X[i];
    Y[i] = T{0.5} * v * (T{1} + std::erf(v / std::numbers::sqrt2_v<T>));
  }
  return tape_of(x).record(std::move(Y), {x}, [x](Tape<T>& tape, const Tensor<T>& g) {
    const auto& X = tape.value(x);
    auto& dX = tape.grad_ref(x);
    const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>;
    for (std::size_t i = 0; i < X.size(); ++i) {
      const T v = X[i];
      const T cdf = T{0.5} * (T{1} + std::erf(v / std::numbers::sqrt2_v<T>));
      const T pdf = inv_sqrt_2pi * std::exp(T{-0.5} * v * v);
      dX[i] += g[i] * (cdf + v * pdf);
    }
  });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  const auto& X = x.value();
  Tensor<T> Y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const T v = X[i];
    if (v >= 0) {
      Y[i] = T{1} / (T{1} + std::exp(-v));
    } else {
      const T e = std::exp(v);
      Y[i] = e / (T{1} + e);
    }
  }
  const std::size_t out_id = tape_of(x).size();
  return tape_of(x).record(std::move(Y), {x}, [x, out_id](Tape<T>& tape, const Tensor<T>& g) {
    const auto& Y = tape.value(Var<T>(&tape, out_id));
    auto& dX = tape.grad_ref(x);
    for (std::size_t i = 0; i < Y.size(); ++i) dX[i] += g[i] * Y[i] * (T{1} - Y[i]);
  });
}

template <typename T>
Var<T> embedding(Var<T> table, std::span<const std::int32_t> ids) {
  const auto& W = table.value();
  if (W.rank() != 2) throw std::invalid_argument("embedding: table must be 2-D, got " + shape_str(W.shape()));
  const std::size_t vocab = W.rows(), d = W.cols();
  Tensor<T> Y = Tensor<T>::matrix(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                              std::to_string(vocab) + " rows");
    }
    auto src = W.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), Y.row(i).begin());
  }
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  return tape_of(table).record(std::move(Y), {table}, [table, d, saved = std::move(saved)](Tape<T>& tape, const Tensor<T>& g) {
    auto& dW = tape.grad_ref(table);
    for (std::size_t i = 0; i < saved.size(); ++i) {
      T* dst = dW.raw() + static_cast<std::size_t>(saved[i]) * d;
      const T* src = g.raw() + i * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
  });
}

template <typename T>
Var<T> dropout(Var<T> x, double rate, bool training, CounterRng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const auto& X = x.value();
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> factor(X.size());
  Tensor<T> Y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    factor[i] = rng.uniform() < rate ? T{0} : keep_scale;
    Y[i] = X[i] * factor[i];
  }
  return tape_of(x).record(std::move(Y), {x}, [x, factor = std::move(factor)](Tape<T>& tape, const Tensor<T>& g) {
    auto& dX = tape.grad_ref(x);
    for (std::size_t i = 0; i < dX.size(); ++i) dX[i] += g[i] * factor[i];
  });
}

template <typename T>
Var<T> slice_cols(Var<T> x, std::size_t begin, std::size_t width) {
  const auto& X = x.value();
  const std::size_t rows = X.rows(), cols = X.cols();
  if (width == 0 || begin + width > cols) {
    throw std::invalid_argument("slice_cols: columns [" + std::to_string(begin) + ", " +
                                std::to_string(begin + width) + ") outside " + shape_str(X.shape()));
  }
  Tensor<T> Y = Tensor<T>::matrix(rows, width);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(X.raw() + r * cols + begin, width, Y.raw() + r * width);
  }
  return tape_of(x).record(std::move(Y), {x}, [x, rows, cols, begin, width](Tape<T>& tape, const Tensor<T>& g) {
    auto& dX = tape.grad_ref(x);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < width; ++c) dX.raw()[r * cols + begin + c] += g.raw()[r * width + c];
    }
  });
}

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: nothing to concatenate");
  const std::size_t rows = parts[0].value().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.value().rows() != rows) shape_error("concat_cols", parts[0].shape(), p.shape());
    total += p.value().cols();
  }
  Tensor<T> Y = Tensor<T>::matrix(rows, total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& P = p.value();
    const std::size_t w = P.cols();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(P.raw() + r * w, w, Y.raw() + r * total + offset);
    offset += w;
  }
  std::vector<Var<T>> saved(parts.begin(), parts.end());
  return tape_of(parts[0]).record_n(std::move(Y), saved, [saved, rows, total](Tape<T>& tape, const Tensor<T>& g) {
    std::size_t offset = 0;
    for (const auto& p : saved) {
      const std::size_t w = tape.value(p).cols();
      if (tape.requires_grad(p)) {
        auto& dP = tape.grad_ref(p);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < w; ++c) dP.raw()[r * w + c] += g.raw()[r * total + offset + c];
        }
      }
      offset += w;
    }
  });
}

template <typename T>
Var<T> slice_rows(Var<T> x, std::size_t begin, std::size_t count) {
  const auto& X = x.value();
  const std::size_t cols = X.cols();
  if (count == 0 || begin + count > X.rows()) {
    throw std::invalid_argument("slice_rows: rows [" + std::to_string(begin) + ", " +
                                std::to_string(begin + count) + ") outside " + shape_str(X.shape()));
  }
  Tensor<T> Y = Tensor<T>::matrix(count, cols);
  std::copy_n(X.raw() + begin * cols, count * cols, Y.raw());
  return tape_of(x).record(std::move(Y), {x}, [x, begin, count, cols](Tape<T>& tape, const Tensor<T>& g) {
    auto& dX = tape.grad_ref(x);
    for (std::size_t i = 0; i < count * cols; ++i) dX.raw()[begin * cols + i] += g.raw()[i];
  });
}

template <typename T>
Var<T> select_row(Var<T> x, std::size_t r) {
  return slice_rows(x, r, 1);
}

template <typename T>
Var<T> sum(Var<T> x) {
  T total = 0;
  for (T v : x.value().data()) total += v;
  return tape_of(x).record(Tensor<T>({1}, total), {x}, [x](Tape<T>& tape, const Tensor<T>& g) {
    auto& dX = tape.grad_ref(x);
    for (auto& v : dX.data()) v += g[0];
  });
}

template <typename T>
Var<T> mean_of(std::span<const Var<T>> scalars) {
  if (scalars.empty()) throw std::invalid_argument("mean_of: empty list");
  T total = 0;
  for (const auto& s : scalars) {
    if (s.value().size() != 1) throw std::invalid_argument("mean_of: non-scalar " + shape_str(s.shape()));
    total += s.value()[0];
  }
  const T n = static_cast<T>(scalars.size());
  std::vector<Var<T>> saved(scalars.begin(), scalars.end());
  return tape_of(scalars[0]).record_n(Tensor<T>({1}, total / n), saved, [saved, n](Tape<T>& tape, const Tensor<T>& g) {
    for (const auto& s : saved) {
      if (tape.requires_grad(s)) tape.grad_ref(s)[0] += g[0] / n;
    }
  });
}

template <typename T>
Var<T> masked_cross_entropy(Var<T> logits, std::span<const std::int32_t> labels, std::int32_t ignore) {
  const auto& L = logits.value();
  const std::size_t rows = L.rows(), vocab = L.cols();
  if (labels.size() != rows) shape_error("masked_cross_entropy", L.shape(), Shape{labels.size()});
  std::vector<T> probs(L.size());
  T total = 0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] == ignore) continue;
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= vocab) {
      throw std::out_of_range("masked_cross_entropy: label " + std::to_string(labels[r]) + " outside vocabulary");
    }
    const T* z = L.raw() + r * vocab;
    T mx = z[0];
    for (std::size_t c = 1; c < vocab; ++c) mx = std::max(mx, z[c]);
    T denom = 0;
    for (std::size_t c = 0; c < vocab; ++c) denom += std::exp(z[c] - mx);
    for (std::size_t c = 0; c < vocab; ++c) probs[r * vocab + c] = std::exp(z[c] - mx) / denom;
    total += mx + std::log(denom) - z[labels[r]];
    ++count;
  }
  if (count == 0) throw std::invalid_argument("masked_cross_entropy: no labelled positions to average");
  std::vector<std::int32_t> saved(labels.begin(), labels.end());
  const T n = static_cast<T>(count);
  return tape_of(logits).record(
      Tensor<T>({1}, total / n), {logits},
      [logits, rows, vocab, ignore, n, saved = std::move(saved), probs = std::move(probs)](
          Tape<T>& tape, const Tensor<T>& g) {
        auto& dL = tape.grad_ref(logits);
        const T s = g[0] / n;
        for (std::size_t r = 0; r < rows; ++r) {
          if (saved[r] == ignore) continue;
          for (std::size_t c = 0; c < vocab; ++c) dL.raw()[r * vocab + c] += s * probs[r * vocab + c];
          dL.raw()[r * vocab + static_cast<std::size_t>(saved[r])] -= s;
        }
      });
}

template <typename T>
Var<T> binary_cross_entropy(Var<T> p, std::span<const int> labels) {
  const auto& P = p.value();
  if (labels.size() != P.size()) shape_error("binary_cross_entropy", P.shape(), Shape{labels.size()});
  T total = 0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("binary_cross_entropy: labels must be 0 or 1");
    total -= labels[i] == 1 ? std::log(P[i]) : std::log1p(-P[i]);
  }
  const T n = static_cast<T>(P.size());
  std::vector<int> saved(labels.begin(), labels.end());
  return tape_of(p).record(Tensor<T>({1}, total / n), {p}, [p, n, saved = std::move(saved)](Tape<T>& tape, const Tensor<T>& g) {
    const auto& P = tape.value(p);
    auto& dP = tape.grad_ref(p);
    for (std::size_t i = 0; i < P.size(); ++i) {
      dP[i] += g[0] / n * (saved[i] == 1 ? -T{1} / P[i] : T{1} / (T{1} - P[i]));
    }
  });
}

template <typename T>
Var<T> bce_with_logits(Var<T> logits, std::span<const int> labels) {
  const auto& Z = logits.value();
  if (labels.size() != Z.size()) shape_error("bce_with_logits", Z.shape(), Shape{labels.size()});
  T total = 0;
  for (std::size_t i = 0; i < Z.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("bce_with_logits: labels must be 0 or 1");
    const T z = Z[i];
    total += std::max(z, T{0}) - z * static_cast<T>(labels[i]) + std::log1p(std::exp(-std::abs(z)));
  }
  const T n = static_cast<T>(Z.size());
  std::vector<int> saved(labels.begin(), labels.end());
  return tape_of(logits).record(Tensor<T>({1}, total / n), {logits}, [logits, n, saved = std::move(saved)](Tape<T>& tape, const Tensor<T>& g) {
    const auto& Z = tape.value(logits);
    auto& dZ = tape.grad_ref(logits);
    for (std::size_t i = 0; i < Z.size(); ++i) {
      const T z = Z[i];
      const T s = z >= 0 ? T{1} / (T{1} + std::exp(-z)) : std::exp(z) / (T{1} + std::exp(z));
      dZ[i] += g[0] / n * (s - static_cast<T>(saved[i]));
    }
  });
}

#define OPPI_INSTANTIATE_OPS(T)                                                              \
  template Var<T> matmul(Var<T>, Var<T>);                                                    \
  template Var<T> matmul_nt(Var<T>, Var<T>);                                                 \
  template Var<T> add(Var<T>, Var<T>);                                                       \
  template Var<T> mul(Var<T>, Var<T>);                                                       \
  template Var<T> add_bias(Var<T>, Var<T>);                                                  \
  template Var<T> scale(Var<T>, T);                                                          \
  template Var<T> add_row_constant(Var<T>, std::span<const T>);                              \
  template Var<T> softmax(Var<T>, int);                                                      \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, T);                                     \
  template Var<T> gelu(Var<T>);                                                              \
  template Var<T> sigmoid(Var<T>);                                                           \
  template Var<T> embedding(Var<T>, std::span<const std::int32_t>);                          \
  template Var<T> dropout(Var<T>, double, bool, CounterRng&);                                \
  template Var<T> slice_cols(Var<T>, std::size_t, std::size_t);                              \
  template Var<T> concat_cols(std::span<const Var<T>>);                                      \
  template Var<T> select_row(Var<T>, std::size_t);                                           \
  template Var<T> slice_rows(Var<T>, std::size_t, std::size_t);                              \
  template Var<T> sum(Var<T>);                                                               \
  template Var<T> mean_of(std::span<const Var<T>>);                                          \
  template Var<T> masked_cross_entropy(Var<T>, std::span<const std::int32_t>, std::int32_t); \
  template Var<T> binary_cross_entropy(Var<T>, std::span<const int>);                        \
  template Var<T> bce_with_logits(Var<T>, std::span<const int>);

OPPI_INSTANTIATE_OPS(float)
OPPI_INSTANTIATE_OPS(double)

#undef OPPI_INSTANTIATE_OPS

}  // namespace oppi::num
