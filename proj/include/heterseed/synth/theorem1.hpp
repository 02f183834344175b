#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/rng.hpp"

namespace heterseed::synth {

/// Two classes of n authors each (a_i: class 0, b_i: class 1) with identical
/// features. Paper p_i is co-written by a_i and b_i. The enriched wiring adds
/// m_same papers for each designated same-class pair (a_i, a_{i+1}),
/// (b_i, b_{i+1}) and m_diff - 1 further papers for each cross pair (a_i, b_i).
struct Theorem1Config {
  std::size_t n = 20;
  std::size_t m_same = 3;
  std::size_t m_diff = 1;
  std::size_t feature_dim = 8;
  bool baseline_only = false;
  std::uint64_t seed = 0;
};

inline std::size_t theorem1_author(std::size_t i, int cls, std::size_t n) { return cls == 0 ? i : n + i; }

/// Designated same-class pairs (i, i+1 mod n), deduplicated for n = 2.
inline std::vector<std::pair<std::size_t, std::size_t>> theorem1_same_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (n == 2 && i == 1) break;
    out.emplace_back(i, j);
  }
  return out;
}

inline HetGraph gen_theorem1(const Theorem1Config& cfg) {
  if (cfg.n < 2) fail(ErrorCode::SameClassPairRequired, "each class needs at least two authors to form a same-class pair");
  if (!(cfg.m_same > cfg.m_diff && cfg.m_diff >= 1))
    fail(ErrorCode::InvalidConfig, "need m_same > m_diff >= 1");
  if (cfg.feature_dim == 0) fail(ErrorCode::InvalidConfig, "feature dimension must be positive");
  const std::size_t n = cfg.n;

  HetGraph g;
  g.node_types = {"author", "paper"};
  g.relations = {{"writes", "author", "paper"}, {"writes_rev", "paper", "author"}};
  g.edges.assign(2, {});
  g.target_type = "author";
  std::size_t papers = 0;
  auto paper = [&](std::size_t u, std::size_t v) {
    const std::size_t p = papers++;
    for (std::size_t a : {u, v}) {
      g.edges[0].push_back({a, p});
      g.edges[1].push_back({p, a});
    }
  };
  for (std::size_t i = 0; i < n; ++i) paper(theorem1_author(i, 0, n), theorem1_author(i, 1, n));
  if (!cfg.baseline_only) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 1; k < cfg.m_diff; ++k) paper(theorem1_author(i, 0, n), theorem1_author(i, 1, n));
    for (auto [i, j] : theorem1_same_pairs(n))
      for (int cls : {0, 1})
        for (std::size_t k = 0; k < cfg.m_same; ++k) paper(theorem1_author(i, cls, n), theorem1_author(j, cls, n));
  }
  g.node_counts = {2 * n, papers};

  // One shared feature vector x0 for every author; papers are featureless.
  Rng rng(derive_seed(cfg.seed, {0x7468}));
  std::vector<float> x0(cfg.feature_dim);
  for (auto& x : x0) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  FeatureMatrix f{2 * n, cfg.feature_dim, {}};
  for (std::size_t v = 0; v < 2 * n; ++v) f.values.insert(f.values.end(), x0.begin(), x0.end());
  g.features = {std::move(f), std::nullopt};

  std::vector<std::int32_t> y(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y[theorem1_author(i, 0, n)] = 0;
    y[theorem1_author(i, 1, n)] = 1;
  }
  g.labels = Labels::make_single(2, std::move(y));

  // Cycle positions 0, 1, 3 (mod 4) train; position 2 alternates test / val.
  // Every held-out author then has both cycle neighbours in the training set.
  for (int cls : {0, 1})
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v = theorem1_author(i, cls, n);
      if (i % 4 != 2)
        g.splits.train.push_back(v);
      else if ((i / 4) % 2 == 0)
        g.splits.test.push_back(v);
      else
        g.splits.val.push_back(v);
    }
  for (auto* s : {&g.splits.train, &g.splits.val, &g.splits.test}) std::sort(s->begin(), s->end());
  g.build_adjacency();
  return g;
}

}  // namespace heterseed::synth
