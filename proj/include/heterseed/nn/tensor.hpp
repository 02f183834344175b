#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "heterseed/error.hpp"

namespace heterseed::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out + ")";
}

/// Dense row-major array with an optional gradient buffer. Rank 0 is a scalar,
/// rank 2 a matrix; all model arrays are rank 2.
template <class T>
struct Tensor {
  Shape shape;
  std::vector<T> values;
  bool requires_grad = false;
  std::vector<T> grad;  // empty means absent

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), values(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<T> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_size(shape))
      fail(ErrorCode::ShapeMismatch, "value count " + std::to_string(values.size()) + " vs shape " + shape_str(shape));
  }

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::size_t cols() const { return shape.size() == 2 ? shape[1] : (shape.empty() ? 1 : shape[0]); }

  T& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  T item() const { return values.at(0); }

  bool has_grad() const { return !grad.empty(); }
  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), T(0));
    return grad;
  }
  void zero_grad() { grad.assign(values.size(), T(0)); }
  void clear_grad() { grad.clear(); }
};

template <class T>
using Var = std::shared_ptr<Tensor<T>>;

template <class T>
Var<T> make_var(Shape s, T fill = T(0), bool requires_grad = false) {
  auto v = std::make_shared<Tensor<T>>(std::move(s), fill);
  v->requires_grad = requires_grad;
  return v;
}

template <class T>
Var<T> make_var(Shape s, std::vector<T> values, bool requires_grad = false) {
  auto v = std::make_shared<Tensor<T>>(std::move(s), std::move(values));
  v->requires_grad = requires_grad;
  return v;
}

template <class T>
Var<T> make_param(Shape s, std::vector<T> values) {
  return make_var<T>(std::move(s), std::move(values), true);
}

}  // namespace heterseed::nn
