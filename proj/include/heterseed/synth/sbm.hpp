#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/metapath.hpp"
#include "heterseed/rng.hpp"

namespace heterseed::synth {

/// Homophilous base graph: groups of authors sharing one paper each, so every
/// group is a clique of the author-paper-author graph. Half of the groups are
/// single-class, the rest have one member from a different class. Features are
/// class means plus Gaussian noise.
struct SbmBaseConfig {
  std::size_t groups = 60;
  std::size_t group_size = 5;
  std::size_t num_classes = 4;
  std::size_t feature_dim = 16;
  double noise = 1.0;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

inline HetGraph sbm_base(const SbmBaseConfig& cfg) {
  if (cfg.groups == 0 || cfg.group_size < 2 || cfg.num_classes < 2 || cfg.feature_dim == 0)
    fail(ErrorCode::InvalidConfig, "sbm base needs groups >= 1, group size >= 2, classes >= 2, features >= 1");
  if (cfg.train_fraction < 0 || cfg.val_fraction < 0 || cfg.train_fraction + cfg.val_fraction > 1)
    fail(ErrorCode::InvalidConfig, "split fractions must be non-negative and sum to at most 1");
  Rng rng(derive_seed(cfg.seed, {0x62617365}));
  const std::size_t n = cfg.groups * cfg.group_size, c = cfg.num_classes;

  HetGraph g;
  g.node_types = {"author", "paper"};
  g.node_counts = {n, cfg.groups};
  g.relations = {{"writes", "author", "paper"}, {"writes_rev", "paper", "author"}};
  g.edges.assign(2, {});
  g.target_type = "author";

  std::vector<std::size_t> group_order(cfg.groups);
  std::iota(group_order.begin(), group_order.end(), 0);
  std::shuffle(group_order.begin(), group_order.end(), rng);
  std::vector<char> pure(cfg.groups, 0);
  for (std::size_t k = 0; k < cfg.groups / 2; ++k) pure[group_order[k]] = 1;

  std::vector<std::int32_t> y(n);
  for (std::size_t grp = 0; grp < cfg.groups; ++grp) {
    const auto cls = static_cast<std::int32_t>(rng.below(c));
    for (std::size_t k = 0; k < cfg.group_size; ++k) {
      const std::size_t v = grp * cfg.group_size + k;
      y[v] = cls;
      g.edges[0].push_back({v, grp});
      g.edges[1].push_back({grp, v});
    }
    if (!pure[grp]) {
      const std::size_t odd = grp * cfg.group_size + rng.below(cfg.group_size);
      y[odd] = static_cast<std::int32_t>((static_cast<std::size_t>(cls) + 1 + rng.below(c - 1)) % c);
    }
  }

  std::vector<std::vector<double>> means(c, std::vector<double>(cfg.feature_dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& m : means)
    for (auto& x : m) x = normal(rng);
  FeatureMatrix f{n, cfg.feature_dim, {}};
  f.values.reserve(n * cfg.feature_dim);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t j = 0; j < cfg.feature_dim; ++j)
      f.values.push_back(static_cast<float>(means[static_cast<std::size_t>(y[v])][j] + cfg.noise * normal(rng)));
  g.features = {std::move(f), std::nullopt};
  g.labels = Labels::make_single(c, std::move(y));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(n));
  const auto n_val = static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(n));
  g.splits.train.assign(order.begin(), order.begin() + n_train);
  g.splits.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  g.splits.test.assign(order.begin() + n_train + n_val, order.end());
  for (auto* s : {&g.splits.train, &g.splits.val, &g.splits.test}) std::sort(s->begin(), s->end());
  g.build_adjacency();
  return g;
}

/// Connected components of size >= 2 in the union of the metapath-induced
/// graphs, each sorted, ordered by smallest member.
inline std::vector<std::vector<std::size_t>> metapath_cliques(std::span<const InducedGraph> graphs) {
  if (graphs.empty()) return {};
  const std::size_t n = graphs.front().num_nodes();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& ig : graphs)
    ig.for_each_edge([&](std::size_t u, std::size_t v, std::uint64_t) {
      const std::size_t a = find(u), b = find(v);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    });
  std::vector<std::vector<std::size_t>> comp(n);
  for (std::size_t v = 0; v < n; ++v) comp[find(v)].push_back(v);
  std::vector<std::vector<std::size_t>> out;
  for (auto& c : comp)
    if (c.size() >= 2) out.push_back(std::move(c));
  return out;
}

enum class InjectMode { high, low, mixed };

struct SbmInjectConfig {
  double rho = 0.0;
  InjectMode mode = InjectMode::low;
  std::uint64_t seed = 0;
};

inline constexpr std::uint64_t kCliqueDraw = 0x636C7164;
inline constexpr std::uint64_t kCliqueMode = 0x636C6D64;
inline constexpr std::uint64_t kCliqueLabels = 0x636C6C62;

/// Relabels target nodes clique by clique; topology and features are untouched.
/// Clique c is selected when its keyed draw falls below rho, so selections are
/// nested as rho grows. HIGH gives all members one random label; LOW deals
/// classes round-robin over a random member order; MIXED picks HIGH or LOW per
/// clique with equal probability.
inline HetGraph sbm_inject(const HetGraph& base, std::span<const Metapath> metapaths, const SbmInjectConfig& cfg) {
  if (!(cfg.rho >= 0.0 && cfg.rho <= 1.0)) fail(ErrorCode::InvalidConfig, "rho must lie in [0, 1]");
  if (base.labels.mode != LabelMode::single) fail(ErrorCode::InvalidConfig, "label injection needs single-label targets");
  HetGraph g = base;
  if (cfg.rho == 0.0) return g;
  std::vector<InducedGraph> graphs;
  for (const auto& p : metapaths) graphs.push_back(build_induced_graph(base, p));
  const auto cliques = metapath_cliques(graphs);
  const std::size_t c = base.labels.num_classes;
  for (std::size_t k = 0; k < cliques.size(); ++k) {
    if (keyed_uniform(cfg.seed, {kCliqueDraw, k}) >= cfg.rho) continue;
    bool high = cfg.mode == InjectMode::high;
    if (cfg.mode == InjectMode::mixed) high = keyed_uniform(cfg.seed, {kCliqueMode, k}) < 0.5;
    Rng rng(derive_seed(cfg.seed, {kCliqueLabels, k}));
    const auto& members = cliques[k];
    if (high) {
      const auto cls = static_cast<std::int32_t>(rng.below(c));
      for (std::size_t v : members) g.labels.single[v] = cls;
    } else {
      std::vector<std::size_t> order = members;
      std::shuffle(order.begin(), order.end(), rng);
      const std::size_t offset = rng.below(c);
      for (std::size_t i = 0; i < order.size(); ++i) g.labels.single[order[i]] = static_cast<std::int32_t>((offset + i) % c);
    }
  }
  return g;
}

}  // namespace heterseed::synth
