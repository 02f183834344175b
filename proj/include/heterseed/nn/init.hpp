#pragma once

#include <cmath>
#include <cstdint>

#include "heterseed/error.hpp"
#include "heterseed/nn/tensor.hpp"
#include "heterseed/rng.hpp"

namespace heterseed::nn {

/// Glorot/Xavier uniform: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <class T>
Var<T> xavier_uniform(const Shape& shape, std::uint64_t seed) {
  if (shape.size() != 2) fail(ErrorCode::ShapeMismatch, "xavier_uniform needs a 2-D shape, got " + shape_str(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  Rng rng(derive_seed(seed, {shape[0], shape[1]}));
  std::vector<T> values(shape_size(shape));
  for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
  return make_param<T>(shape, std::move(values));
}

template <class T>
Var<T> zeros_param(const Shape& shape) {
  return make_var<T>(shape, T(0), true);
}

}  // namespace heterseed::nn
