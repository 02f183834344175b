#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/nn/tensor.hpp"

namespace heterseed::nn {

template <class T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// One bias-corrected Adam update over all parameters. A parameter without a
/// gradient buffer is treated as having zero gradient. Gradients are left in place.
template <class T>
void adam_step(std::span<const Var<T>> params, AdamState<T>& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p->size(), T(0));
      state.v.emplace_back(p->size(), T(0));
    }
  }
  if (state.m.size() != params.size()) fail(ErrorCode::ShapeMismatch, "Adam state tracks a different parameter list");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p.size() || (p.has_grad() && p.grad.size() != p.size()))
      fail(ErrorCode::ShapeMismatch, "Adam moment shape differs from parameter " + std::to_string(k));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.has_grad() ? static_cast<double>(p.grad[i]) : 0.0;
      const double mi = state.beta1 * static_cast<double>(m[i]) + (1.0 - state.beta1) * g;
      const double vi = state.beta2 * static_cast<double>(v[i]) + (1.0 - state.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = state.lr * (mi / c1) / (std::sqrt(vi / c2) + state.eps);
      p.values[i] = static_cast<T>(static_cast<double>(p.values[i]) - update);
    }
  }
}

}  // namespace heterseed::nn
