#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/nn/sparse.hpp"
#include "heterseed/nn/tape.hpp"
#include "heterseed/nn/tensor.hpp"
#include "heterseed/rng.hpp"

// Differentiable primitives. Every op takes the tape first; when the tape is
// not recording or no input requires a gradient the op is not recorded and the
// output is a plain constant.

namespace heterseed::nn {

namespace detail {

template <class T>
bool tracks(const Tape<T>& tape, std::initializer_list<const Tensor<T>*> inputs) {
  if (!tape.recording()) return false;
  for (const auto* x : inputs)
    if (x->requires_grad) return true;
  return false;
}

inline void check(bool ok, const char* op, const std::string& detail) {
  if (!ok) fail(ErrorCode::ShapeMismatch, std::string(op) + ": " + detail);
}

inline void check_matrix(const Shape& s, const char* op) {
  check(s.size() == 2, op, "expected a matrix, got " + shape_str(s));
}

template <class T>
Var<T> output(Shape s, bool grad) {
  return make_var<T>(std::move(s), T(0), grad);
}

template <class T>
void accumulate(const Var<T>& x, std::size_t i, T g) {
  x->ensure_grad()[i] += g;
}

}  // namespace detail

template <class T>
Var<T> matmul(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  detail::check_matrix(a->shape, "matmul");
  detail::check_matrix(b->shape, "matmul");
  const std::size_t n = a->shape[0], k = a->shape[1], m = b->shape[1];
  detail::check(b->shape[0] == k, "matmul", shape_str(a->shape) + " x " + shape_str(b->shape));
  const bool grad = detail::tracks(tape, {a.get(), b.get()});
  auto out = detail::output<T>({n, m}, grad);
  const T* A = a->values.data();
  const T* B = b->values.data();
  T* C = out->values.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = A[i * k + p];
      if (aip == T(0)) continue;
      for (std::size_t j = 0; j < m; ++j) C[i * m + j] += aip * B[p * m + j];
    }
  if (grad)
    tape.record(out, [a, b, out, n, k, m] {
      const T* G = out->grad.data();
      if (a->requires_grad) {
        auto& ga = a->ensure_grad();
        const T* B = b->values.data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            T s = 0;
            for (std::size_t j = 0; j < m; ++j) s += G[i * m + j] * B[p * m + j];
            ga[i * k + p] += s;
          }
      }
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        const T* A = a->values.data();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const T aip = A[i * k + p];
            if (aip == T(0)) continue;
            for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += aip * G[i * m + j];
          }
      }
    });
  return out;
}

/// Elementwise sum; b may also be a (1 x cols) row broadcast over the rows of a.
template <class T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  const bool same = a->shape == b->shape;
  const bool row_bcast = !same && a->rank() == 2 && b->rank() == 2 && b->shape[0] == 1 && b->shape[1] == a->shape[1];
  detail::check(same || row_bcast, "add", shape_str(a->shape) + " + " + shape_str(b->shape));
  const bool grad = detail::tracks(tape, {a.get(), b.get()});
  auto out = detail::output<T>(a->shape, grad);
  const std::size_t cols = a->cols();
  for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] + b->values[same ? i : i % cols];
  if (grad)
    tape.record(out, [a, b, out, same, cols] {
      const auto& g = out->grad;
      if (a->requires_grad) {
        auto& ga = a->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[same ? i : i % cols] += g[i];
      }
    });
  return out;
}

template <class T>
Var<T> sub(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  detail::check(a->shape == b->shape, "sub", shape_str(a->shape) + " - " + shape_str(b->shape));
  const bool grad = detail::tracks(tape, {a.get(), b.get()});
  auto out = detail::output<T>(a->shape, grad);
  for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] - b->values[i];
  if (grad)
    tape.record(out, [a, b, out] {
      const auto& g = out->grad;
      if (a->requires_grad) {
        auto& ga = a->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  return out;
}

/// Elementwise product; b may also be a (rows x 1) column broadcast over the columns of a.
template <class T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  const bool same = a->shape == b->shape;
  const bool col_bcast = !same && a->rank() == 2 && b->rank() == 2 && b->shape[1] == 1 && b->shape[0] == a->shape[0];
  detail::check(same || col_bcast, "mul", shape_str(a->shape) + " * " + shape_str(b->shape));
  const bool grad = detail::tracks(tape, {a.get(), b.get()});
  auto out = detail::output<T>(a->shape, grad);
  const std::size_t cols = a->cols();
  auto bi = [same, cols](std::size_t i) { return same ? i : i / cols; };
  for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] * b->values[bi(i)];
  if (grad)
    tape.record(out, [a, b, out, bi] {
      const auto& g = out->grad;
      if (a->requires_grad) {
        auto& ga = a->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b->values[bi(i)];
      }
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[bi(i)] += g[i] * a->values[i];
      }
    });
  return out;
}

template <class T>
Var<T> scale(Tape<T>& tape, const Var<T>& a, T c) {
  const bool grad = detail::tracks(tape, {a.get()});
  auto out = detail::output<T>(a->shape, grad);
  for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] * c;
  if (grad)
    tape.record(out, [a, out, c] {
      auto& ga = a->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += out->grad[i] * c;
    });
  return out;
}

template <class T>
Var<T> relu(Tape<T>& tape, const Var<T>& a) {
  const bool grad = detail::tracks(tape, {a.get()});
  auto out = detail::output<T>(a->shape, grad);
  for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = a->values[i] > T(0) ? a->values[i] : T(0);
  if (grad)
    tape.record(out, [a, out] {
      auto& ga = a->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i)
        if (a->values[i] > T(0)) ga[i] += out->grad[i];
    });
  return out;
}

template <class T>
T sigmoid_value(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
Var<T> sigmoid(Tape<T>& tape, const Var<T>& a) {
  const bool grad = detail::tracks(tape, {a.get()});
  auto out = detail::output<T>(a->shape, grad);
  for (std::size_t i = 0; i < a->size(); ++i) out->values[i] = sigmoid_value(a->values[i]);
  if (grad)
    tape.record(out, [a, out] {
      auto& ga = a->ensure_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) {
        const T s = out->values[i];
        ga[i] += out->grad[i] * s * (T(1) - s);
      }
    });
  return out;
}

template <class T>
Var<T> softmax_rows(Tape<T>& tape, const Var<T>& a) {
  detail::check_matrix(a->shape, "softmax_rows");
  const std::size_t n = a->shape[0], m = a->shape[1];
  const bool grad = detail::tracks(tape, {a.get()});
  auto out = detail::output<T>(a->shape, grad);
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = a->values.data() + i * m;
    T* y = out->values.data() + i * m;
    const T peak = m ? *std::max_element(x, x + m) : T(0);
    T z = 0;
    for (std::size_t j = 0; j < m; ++j) z += (y[j] = std::exp(x[j] - peak));
    for (std::size_t j = 0; j < m; ++j) y[j] /= z;
  }
  if (grad)
    tape.record(out, [a, out, n, m] {
      auto& ga = a->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        const T* y = out->values.data() + i * m;
        const T* g = out->grad.data() + i * m;
        T dot = 0;
        for (std::size_t j = 0; j < m; ++j) dot += g[j] * y[j];
        for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += y[j] * (g[j] - dot);
      }
    });
  return out;
}

/// Column-wise concatenation of matrices with equal row counts.
template <class T>
Var<T> concat(Tape<T>& tape, const std::vector<Var<T>>& parts) {
  detail::check(!parts.empty(), "concat", "no inputs");
  const std::size_t n = parts.front()->rows();
  std::size_t total = 0;
  bool grad = false;
  for (const auto& p : parts) {
    detail::check_matrix(p->shape, "concat");
    detail::check(p->shape[0] == n, "concat", "row counts differ");
    total += p->shape[1];
    grad = grad || detail::tracks(tape, {p.get()});
  }
  auto out = detail::output<T>({n, total}, grad);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t m = p->shape[1];
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(p->values.data() + i * m, m, out->values.data() + i * total + off);
    off += m;
  }
  if (grad)
    tape.record(out, [parts, out, n, total] {
      std::size_t off = 0;
      for (const auto& p : parts) {
        const std::size_t m = p->shape[1];
        if (p->requires_grad) {
          auto& gp = p->ensure_grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) gp[i * m + j] += out->grad[i * total + off + j];
        }
        off += m;
      }
    });
  return out;
}

/// out[i] = x[index[i]].
template <class T>
Var<T> row_gather(Tape<T>& tape, const Var<T>& x, std::vector<std::size_t> index) {
  detail::check_matrix(x->shape, "row_gather");
  const std::size_t m = x->shape[1];
  for (std::size_t r : index) detail::check(r < x->shape[0], "row_gather", "index out of range");
  const bool grad = detail::tracks(tape, {x.get()});
  auto out = detail::output<T>({index.size(), m}, grad);
  for (std::size_t i = 0; i < index.size(); ++i)
    std::copy_n(x->values.data() + index[i] * m, m, out->values.data() + i * m);
  if (grad)
    tape.record(out, [x, out, m, idx = std::move(index)] {
      auto& gx = x->ensure_grad();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < m; ++j) gx[idx[i] * m + j] += out->grad[i * m + j];
    });
  return out;
}

/// out has n_rows rows; out[index[i]] += src[i].
template <class T>
Var<T> row_scatter_add(Tape<T>& tape, const Var<T>& src, std::vector<std::size_t> index, std::size_t n_rows) {
  detail::check_matrix(src->shape, "row_scatter_add");
  detail::check(index.size() == src->shape[0], "row_scatter_add", "index length differs from row count");
  const std::size_t m = src->shape[1];
  for (std::size_t r : index) detail::check(r < n_rows, "row_scatter_add", "index out of range");
  const bool grad = detail::tracks(tape, {src.get()});
  auto out = detail::output<T>({n_rows, m}, grad);
  for (std::size_t i = 0; i < index.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) out->values[index[i] * m + j] += src->values[i * m + j];
  if (grad)
    tape.record(out, [src, out, m, idx = std::move(index)] {
      auto& gs = src->ensure_grad();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < m; ++j) gs[i * m + j] += out->grad[idx[i] * m + j];
    });
  return out;
}

/// Copy of base with src rows added at index; rows not indexed are copied bit for bit.
template <class T>
Var<T> index_add(Tape<T>& tape, const Var<T>& base, std::vector<std::size_t> index, const Var<T>& src) {
  detail::check_matrix(base->shape, "index_add");
  detail::check_matrix(src->shape, "index_add");
  detail::check(src->shape[1] == base->shape[1] && src->shape[0] == index.size(), "index_add", "shape mismatch");
  const std::size_t m = base->shape[1];
  for (std::size_t r : index) detail::check(r < base->shape[0], "index_add", "index out of range");
  const bool grad = detail::tracks(tape, {base.get(), src.get()});
  auto out = detail::output<T>(base->shape, grad);
  out->values = base->values;
  for (std::size_t i = 0; i < index.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) out->values[index[i] * m + j] += src->values[i * m + j];
  if (grad)
    tape.record(out, [base, src, out, m, idx = std::move(index)] {
      if (base->requires_grad) {
        auto& gb = base->ensure_grad();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += out->grad[i];
      }
      if (src->requires_grad) {
        auto& gs = src->ensure_grad();
        for (std::size_t i = 0; i < idx.size(); ++i)
          for (std::size_t j = 0; j < m; ++j) gs[i * m + j] += out->grad[idx[i] * m + j];
      }
    });
  return out;
}

/// Sparse constant times dense: out = A x. Rows are reduced in CSR order.
template <class T>
Var<T> spmm(Tape<T>& tape, SparsePtr<T> a, const Var<T>& x) {
  detail::check_matrix(x->shape, "spmm");
  detail::check(a->cols == x->shape[0], "spmm",
                "sparse cols " + std::to_string(a->cols) + " vs dense rows " + std::to_string(x->shape[0]));
  const std::size_t m = x->shape[1];
  const bool grad = detail::tracks(tape, {x.get()});
  auto out = detail::output<T>({a->rows, m}, grad);
  for (std::size_t i = 0; i < a->rows; ++i)
    for (std::size_t k = a->offsets[i]; k < a->offsets[i + 1]; ++k) {
      const T w = a->weights[k];
      const T* src = x->values.data() + a->indices[k] * m;
      T* dst = out->values.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += w * src[j];
    }
  if (grad)
    tape.record(out, [a, x, out, m] {
      auto& gx = x->ensure_grad();
      for (std::size_t i = 0; i < a->rows; ++i)
        for (std::size_t k = a->offsets[i]; k < a->offsets[i + 1]; ++k) {
          const T w = a->weights[k];
          const T* g = out->grad.data() + i * m;
          T* dst = gx.data() + a->indices[k] * m;
          for (std::size_t j = 0; j < m; ++j) dst[j] += w * g[j];
        }
    });
  return out;
}

/// Inverted dropout: kept entries are scaled by 1 / (1 - rate). Identity when
/// not training or rate == 0.
template <class T>
Var<T> dropout(Tape<T>& tape, const Var<T>& x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate > 1.0) fail(ErrorCode::InvalidConfig, "dropout rate outside [0, 1]");
  if (!training || rate == 0.0) return x;
  const bool grad = detail::tracks(tape, {x.get()});
  auto out = detail::output<T>(x->shape, grad);
  std::vector<T> mask(x->size(), T(0));
  if (rate < 1.0) {
    const T keep_scale = T(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (rng.uniform() >= rate) mask[i] = keep_scale;
  }
  for (std::size_t i = 0; i < mask.size(); ++i) out->values[i] = x->values[i] * mask[i];
  if (grad)
    tape.record(out, [x, out, mask = std::move(mask)] {
      auto& gx = x->ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += out->grad[i] * mask[i];
    });
  return out;
}

/// Column means as a (1 x cols) row.
template <class T>
Var<T> mean_rows(Tape<T>& tape, const Var<T>& x) {
  detail::check_matrix(x->shape, "mean_rows");
  const std::size_t n = x->shape[0], m = x->shape[1];
  detail::check(n > 0, "mean_rows", "no rows");
  const bool grad = detail::tracks(tape, {x.get()});
  auto out = detail::output<T>({1, m}, grad);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out->values[j] += x->values[i * m + j];
  for (auto& v : out->values) v /= T(n);
  if (grad)
    tape.record(out, [x, out, n, m] {
      auto& gx = x->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += out->grad[j] / T(n);
    });
  return out;
}

template <class T>
Var<T> sum(Tape<T>& tape, const Var<T>& x) {
  const bool grad = detail::tracks(tape, {x.get()});
  auto out = detail::output<T>({}, grad);
  T s = 0;
  for (T v : x->values) s += v;
  out->values[0] = s;
  if (grad)
    tape.record(out, [x, out] {
      auto& gx = x->ensure_grad();
      for (auto& g : gx) g += out->grad[0];
    });
  return out;
}

/// Mean softmax cross-entropy over the selected rows.
template <class T>
Var<T> softmax_cross_entropy(Tape<T>& tape, const Var<T>& logits, std::vector<std::size_t> rows,
                             std::vector<std::int32_t> targets) {
  detail::check_matrix(logits->shape, "softmax_cross_entropy");
  if (rows.empty()) fail(ErrorCode::EmptyMask, "no rows selected for the classification loss");
  detail::check(rows.size() == targets.size(), "softmax_cross_entropy", "rows/targets length mismatch");
  const std::size_t c = logits->shape[1];
  for (std::size_t k = 0; k < rows.size(); ++k)
    detail::check(rows[k] < logits->shape[0] && targets[k] >= 0 && std::size_t(targets[k]) < c,
                  "softmax_cross_entropy", "row or target out of range");
  const bool grad = detail::tracks(tape, {logits.get()});
  auto out = detail::output<T>({}, grad);
  std::vector<T> probs(rows.size() * c);
  T total = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const T* x = logits->values.data() + rows[k] * c;
    const T peak = *std::max_element(x, x + c);
    T z = 0;
    for (std::size_t j = 0; j < c; ++j) z += (probs[k * c + j] = std::exp(x[j] - peak));
    for (std::size_t j = 0; j < c; ++j) probs[k * c + j] /= z;
    total += std::log(z) + peak - x[targets[k]];
  }
  const T inv = T(1) / T(rows.size());
  out->values[0] = total * inv;
  if (grad)
    tape.record(out, [logits, out, c, inv, rows = std::move(rows), targets = std::move(targets),
                      probs = std::move(probs)] {
      auto& gl = logits->ensure_grad();
      const T g = out->grad[0] * inv;
      for (std::size_t k = 0; k < rows.size(); ++k)
        for (std::size_t j = 0; j < c; ++j)
          gl[rows[k] * c + j] += g * (probs[k * c + j] - (std::int32_t(j) == targets[k] ? T(1) : T(0)));
    });
  return out;
}

/// Mean elementwise sigmoid binary cross-entropy over the selected rows.
template <class T>
Var<T> bce_with_logits(Tape<T>& tape, const Var<T>& logits, std::vector<std::size_t> rows,
                       std::vector<std::vector<std::uint8_t>> targets) {
  detail::check_matrix(logits->shape, "bce_with_logits");
  if (rows.empty()) fail(ErrorCode::EmptyMask, "no rows selected for the classification loss");
  const std::size_t c = logits->shape[1];
  detail::check(rows.size() == targets.size(), "bce_with_logits", "rows/targets length mismatch");
  for (std::size_t k = 0; k < rows.size(); ++k)
    detail::check(rows[k] < logits->shape[0] && targets[k].size() == c, "bce_with_logits", "row or target out of range");
  const bool grad = detail::tracks(tape, {logits.get()});
  auto out = detail::output<T>({}, grad);
  T total = 0;
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t j = 0; j < c; ++j) {
      const T x = logits->values[rows[k] * c + j];
      const T y = targets[k][j] ? T(1) : T(0);
      total += std::max(x, T(0)) - x * y + std::log1p(std::exp(-std::abs(x)));
    }
  const T inv = T(1) / T(rows.size() * c);
  out->values[0] = total * inv;
  if (grad)
    tape.record(out, [logits, out, c, inv, rows = std::move(rows), targets = std::move(targets)] {
      auto& gl = logits->ensure_grad();
      const T g = out->grad[0] * inv;
      for (std::size_t k = 0; k < rows.size(); ++k)
        for (std::size_t j = 0; j < c; ++j) {
          const std::size_t i = rows[k] * c + j;
          gl[i] += g * (sigmoid_value(logits->values[i]) - (targets[k][j] ? T(1) : T(0)));
        }
    });
  return out;
}

/// Mean over rows of |cos(a_i, b_i)|; rows where either side is all zeros contribute 0.
template <class T>
Var<T> abs_cosine_mean(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  detail::check_matrix(a->shape, "abs_cosine_mean");
  detail::check(a->shape == b->shape, "abs_cosine_mean", shape_str(a->shape) + " vs " + shape_str(b->shape));
  const std::size_t n = a->shape[0], m = a->shape[1];
  detail::check(n > 0, "abs_cosine_mean", "no rows");
  const bool grad = detail::tracks(tape, {a.get(), b.get()});
  auto out = detail::output<T>({}, grad);
  std::vector<T> cosv(n, 0), na(n, 0), nb(n, 0);
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    T dot = 0, sa = 0, sb = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const T x = a->values[i * m + j], y = b->values[i * m + j];
      dot += x * y;
      sa += x * x;
      sb += y * y;
    }
    if (sa == T(0) || sb == T(0)) continue;
    na[i] = std::sqrt(sa);
    nb[i] = std::sqrt(sb);
    cosv[i] = dot / (na[i] * nb[i]);
    total += std::abs(cosv[i]);
  }
  out->values[0] = total / T(n);
  if (grad)
    tape.record(out, [a, b, out, n, m, cosv = std::move(cosv), na = std::move(na), nb = std::move(nb)] {
      const T g = out->grad[0] / T(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (na[i] == T(0) || nb[i] == T(0) || cosv[i] == T(0)) continue;
        const T s = cosv[i] > T(0) ? g : -g;
        const T inv = T(1) / (na[i] * nb[i]);
        for (std::size_t j = 0; j < m; ++j) {
          const T x = a->values[i * m + j], y = b->values[i * m + j];
          if (a->requires_grad) a->ensure_grad()[i * m + j] += s * (y * inv - cosv[i] * x / (na[i] * na[i]));
          if (b->requires_grad) b->ensure_grad()[i * m + j] += s * (x * inv - cosv[i] * y / (nb[i] * nb[i]));
        }
      }
    });
  return out;
}

/// ||C||_F^2 / (d_a d_b) with C = A_c^T B_c / n and A_c, B_c column-centred.
template <class T>
Var<T> cross_covariance_loss(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  detail::check_matrix(a->shape, "cross_covariance_loss");
  detail::check_matrix(b->shape, "cross_covariance_loss");
  detail::check(a->shape[0] == b->shape[0] && a->shape[0] > 0, "cross_covariance_loss", "row counts differ");
  const std::size_t n = a->shape[0], da = a->shape[1], db = b->shape[1];
  auto centre = [n](const Tensor<T>& x, std::size_t d) {
    std::vector<T> c(x.values);
    for (std::size_t j = 0; j < d; ++j) {
      T mu = 0;
      for (std::size_t i = 0; i < n; ++i) mu += x.values[i * d + j];
      mu /= T(n);
      for (std::size_t i = 0; i < n; ++i) c[i * d + j] -= mu;
    }
    return c;
  };
  std::vector<T> ac = centre(*a, da), bc = centre(*b, db);
  std::vector<T> cov(da * db, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < da; ++p)
      for (std::size_t q = 0; q < db; ++q) cov[p * db + q] += ac[i * da + p] * bc[i * db + q];
  T total = 0;
  for (auto& v : cov) {
    v /= T(n);
    total += v * v;
  }
  const T norm = T(da * db);
  const bool grad = detail::tracks(tape, {a.get(), b.get()});
  auto out = detail::output<T>({}, grad);
  out->values[0] = total / norm;
  if (grad)
    tape.record(out, [a, b, out, n, da, db, norm, ac = std::move(ac), bc = std::move(bc), cov = std::move(cov)] {
      // dL/dC = 2C / norm; dL/dA_c = B_c (dL/dC)^T / n; centring projects out the column mean.
      const T g = out->grad[0] * T(2) / norm / T(n);
      auto apply = [&](const Var<T>& x, std::size_t d, const std::vector<T>& other, std::size_t dother, bool left) {
        if (!x->requires_grad) return;
        std::vector<T> gc(n * d, 0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < d; ++p) {
            T s = 0;
            for (std::size_t q = 0; q < dother; ++q)
              s += other[i * dother + q] * (left ? cov[p * db + q] : cov[q * db + p]);
            gc[i * d + p] = g * s;
          }
        auto& gx = x->ensure_grad();
        for (std::size_t p = 0; p < d; ++p) {
          T mu = 0;
          for (std::size_t i = 0; i < n; ++i) mu += gc[i * d + p];
          mu /= T(n);
          for (std::size_t i = 0; i < n; ++i) gx[i * d + p] += gc[i * d + p] - mu;
        }
      };
      apply(a, da, bc, db, true);
      apply(b, db, ac, da, false);
    });
  return out;
}

}  // namespace heterseed::nn
