#pragma once

#include <cstdint>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/rng.hpp"

namespace heterseed::synth {

struct BiasRow {
  double q = 0.0;
  double empirical = 0.0;  // mean of (f(v) - y_v)^2 over trials
  double closed_form = 0.0;  // 4 q^2
};

/// f(v) = sum_u a_vu y_u for random convex weights whose heterophilic part sums
/// to q. Homophilic neighbours carry y_v and heterophilic ones -y_v.
inline double smoother_squared_bias(double q, Rng& rng) {
  const std::size_t n_homo = 1 + rng.below(6), n_hetero = 1 + rng.below(6);
  const double y = rng.uniform() < 0.5 ? -1.0 : 1.0;
  auto weights = [&](std::size_t k, double mass) {
    std::vector<double> w(k);
    double s = 0.0;
    for (auto& x : w) s += x = 0.05 + rng.uniform();
    for (auto& x : w) x *= mass / s;
    return w;
  };
  double f = 0.0;
  for (double a : weights(n_homo, 1.0 - q)) f += a * y;
  for (double a : weights(n_hetero, q)) f += a * -y;
  return (f - y) * (f - y);
}

inline std::vector<BiasRow> bias_simulation(const std::vector<double>& q_grid, std::size_t trials, std::uint64_t seed = 0) {
  if (trials == 0) fail(ErrorCode::InvalidConfig, "need at least one trial");
  std::vector<BiasRow> out;
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    const double q = q_grid[i];
    if (!(q >= 0.0 && q <= 1.0)) fail(ErrorCode::InvalidConfig, "q values must lie in [0, 1]");
    Rng rng(derive_seed(seed, {i}));
    double sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) sum += smoother_squared_bias(q, rng);
    out.push_back({q, sum / static_cast<double>(trials), 4.0 * q * q});
  }
  return out;
}

/// Empirical Bias^2(f) - Bias^2(f_s) where f mixes with heterophilic mass q and
/// f_s with q_tilde; the closed form is 4 (q^2 - q_tilde^2).
inline double bias_gap(double q, double q_tilde, std::size_t trials, std::uint64_t seed = 0) {
  const auto rows = bias_simulation({q, q_tilde}, trials, seed);
  return rows[0].empirical - rows[1].empirical;
}

}  // namespace heterseed::synth
