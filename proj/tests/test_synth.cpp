#include <set>

#include "test_util.hpp"

using namespace heterseed;
using namespace heterseed::synth;

namespace {

/// Depth-2 typed rooted signature of an author: for each paper, its degree and
/// the sorted degrees of its co-authors.
using Signature = std::multiset<std::pair<std::size_t, std::multiset<std::size_t>>>;

Signature signature(const HetGraph& g, std::size_t author) {
  const auto& out = g.out_adj[0];
  const auto& in = g.in_adj[0];
  Signature s;
  for (std::size_t k = out.begin(author); k < out.end(author); ++k) {
    const std::size_t p = out.targets[k];
    std::multiset<std::size_t> co;
    for (std::size_t j = in.begin(p); j < in.end(p); ++j) co.insert(out.degree(in.targets[j]));
    s.insert({in.degree(p), co});
  }
  return s;
}

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code);
  }
}

}  // namespace

TEST(theorem1, apa_counts_match_design) {
  Theorem1Config cfg;
  cfg.n = 20;
  auto g = gen_theorem1(cfg);
  auto ig = build_induced_graph(g, parse_metapath(g, "author-paper-author"));
  std::set<std::pair<std::size_t, std::size_t>> same, cross;
  for (auto [i, j] : theorem1_same_pairs(20))
    for (int c : {0, 1}) {
      same.insert({theorem1_author(i, c, 20), theorem1_author(j, c, 20)});
      same.insert({theorem1_author(j, c, 20), theorem1_author(i, c, 20)});
    }
  for (std::size_t i = 0; i < 20; ++i) {
    cross.insert({theorem1_author(i, 0, 20), theorem1_author(i, 1, 20)});
    cross.insert({theorem1_author(i, 1, 20), theorem1_author(i, 0, 20)});
  }
  std::size_t n_same = 0, n_cross = 0;
  for (std::size_t u = 0; u < 40; ++u)
    for (std::size_t v = 0; v < 40; ++v) {
      if (u == v) continue;
      const auto c = ig.count(u, v);
      if (same.count({u, v})) {
        EXPECT_EQ(c, 3u);
        ++n_same;
      } else if (cross.count({u, v})) {
        EXPECT_EQ(c, 1u);
        ++n_cross;
      } else {
        EXPECT_EQ(c, 0u);
      }
    }
  EXPECT_EQ(n_same, 80u);
  EXPECT_EQ(n_cross, 40u);
}

TEST(theorem1, extra_cross_papers_and_two_author_cycle) {
  Theorem1Config cfg;
  cfg.n = 2;
  cfg.m_same = 4;
  cfg.m_diff = 2;
  auto g = gen_theorem1(cfg);
  auto ig = build_induced_graph(g, parse_metapath(g, "author-paper-author"));
  EXPECT_EQ(ig.count(theorem1_author(0, 0, 2), theorem1_author(1, 0, 2)), 4u);  // deduplicated pair
  EXPECT_EQ(ig.count(theorem1_author(0, 0, 2), theorem1_author(0, 1, 2)), 2u);
  EXPECT_EQ(ig.count(theorem1_author(0, 0, 2), theorem1_author(1, 1, 2)), 0u);
}

TEST(theorem1, degenerate_configs_rejected) {
  Theorem1Config cfg;
  cfg.n = 1;
  cfg.m_same = 2;
  expect_code(ErrorCode::SameClassPairRequired, [&] { gen_theorem1(cfg); });
  Theorem1Config eq;
  eq.m_same = eq.m_diff = 2;
  expect_code(ErrorCode::InvalidConfig, [&] { gen_theorem1(eq); });
  Theorem1Config zero;
  zero.m_diff = 0;
  expect_code(ErrorCode::InvalidConfig, [&] { gen_theorem1(zero); });
}

TEST(theorem1, baseline_wiring_is_isomorphic_for_every_author) {
  Theorem1Config cfg;
  cfg.baseline_only = true;
  auto g = gen_theorem1(cfg);
  const auto ref = signature(g, 0);
  for (std::size_t v = 1; v < g.num_targets(); ++v) EXPECT_EQ(signature(g, v), ref) << v;
  // each baseline paper links one author of each class
  for (std::size_t p = 0; p < g.node_counts[1]; ++p) {
    ASSERT_EQ(g.in_adj[0].degree(p), 2u);
    std::set<std::int32_t> cls;
    for (std::size_t k = g.in_adj[0].begin(p); k < g.in_adj[0].end(p); ++k) cls.insert(g.labels.single[g.in_adj[0].targets[k]]);
    EXPECT_EQ(cls.size(), 2u);
  }
}

TEST(theorem1, full_wiring_keeps_degrees_uniform) {
  auto g = gen_theorem1({});
  const auto ref = signature(g, 0);
  for (std::size_t v = 1; v < g.num_targets(); ++v) EXPECT_EQ(signature(g, v), ref);
}

TEST(theorem1, identical_features_labels_and_splits) {
  auto g = gen_theorem1({});
  const auto& f = *g.features[0];
  for (std::size_t v = 1; v < f.rows; ++v)
    for (std::size_t j = 0; j < f.cols; ++j) EXPECT_EQ(f.values[v * f.cols + j], f.values[j]);
  EXPECT_FALSE(g.features[1].has_value());
  EXPECT_TRUE(validate(g).empty());
  std::set<std::int32_t> train_classes;
  for (auto v : g.splits.train) train_classes.insert(g.labels.single[v]);
  EXPECT_EQ(train_classes.size(), 2u);
  EXPECT_FALSE(g.splits.test.empty());
  EXPECT_FALSE(g.splits.val.empty());
  EXPECT_EQ(g.labels.single[theorem1_author(3, 0, 20)], 0);
  EXPECT_EQ(g.labels.single[theorem1_author(3, 1, 20)], 1);
}

TEST(sbm, base_graph_shape) {
  SbmBaseConfig cfg;
  cfg.groups = 10;
  cfg.group_size = 4;
  auto g = sbm_base(cfg);
  EXPECT_TRUE(validate(g).empty());
  auto ig = build_induced_graph(g, parse_metapath(g, "author-paper-author"));
  auto cliques = metapath_cliques(std::span<const InducedGraph>(&ig, 1));
  ASSERT_EQ(cliques.size(), 10u);
  std::size_t pure = 0;
  for (const auto& c : cliques) {
    ASSERT_EQ(c.size(), 4u);
    std::set<std::int32_t> cls;
    for (auto v : c) cls.insert(g.labels.single[v]);
    EXPECT_LE(cls.size(), 2u);
    pure += cls.size() == 1;
  }
  EXPECT_EQ(pure, 5u);
  EXPECT_EQ(g.splits.train.size(), 24u);
  EXPECT_EQ(g.splits.val.size(), 8u);
}

TEST(sbm, rho_zero_is_bitwise_identity) {
  auto base = sbm_base({});
  auto mp = parse_metapath(base, "author-paper-author");
  for (auto mode : {InjectMode::high, InjectMode::low, InjectMode::mixed}) {
    auto g = sbm_inject(base, std::span<const Metapath>(&mp, 1), {0.0, mode, 5});
    EXPECT_TRUE(g == base);
  }
}

TEST(sbm, injection_preserves_topology_and_features) {
  auto base = sbm_base({});
  auto mp = parse_metapath(base, "author-paper-author");
  for (auto mode : {InjectMode::high, InjectMode::low, InjectMode::mixed}) {
    auto g = sbm_inject(base, std::span<const Metapath>(&mp, 1), {1.0, mode, 5});
    EXPECT_EQ(g.edges, base.edges);
    EXPECT_TRUE(g.features == base.features);
    EXPECT_TRUE(g.splits == base.splits);
    EXPECT_NE(g.labels.single, base.labels.single);
  }
}

TEST(sbm, high_mode_on_single_clique_gives_full_homophily) {
  SbmBaseConfig cfg;
  cfg.groups = 1;
  cfg.group_size = 6;
  cfg.train_fraction = 1.0;
  cfg.val_fraction = 0.0;
  auto base = sbm_base(cfg);
  auto mp = parse_metapath(base, "author-paper-author");
  auto g = sbm_inject(base, std::span<const Metapath>(&mp, 1), {1.0, InjectMode::high, 2});
  std::set<std::int32_t> cls(g.labels.single.begin(), g.labels.single.end());
  EXPECT_EQ(cls.size(), 1u);
  EXPECT_DOUBLE_EQ(global_homophily(build_induced_graph(g, mp), g.labels), 1.0);
}

TEST(sbm, low_mode_deals_classes_round_robin) {
  auto base = sbm_base({});
  auto mp = parse_metapath(base, "author-paper-author");
  auto g = sbm_inject(base, std::span<const Metapath>(&mp, 1), {1.0, InjectMode::low, 3});
  auto ig = build_induced_graph(g, mp);
  for (const auto& c : metapath_cliques(std::span<const InducedGraph>(&ig, 1))) {
    std::vector<int> hist(4, 0);
    for (auto v : c) ++hist[static_cast<std::size_t>(g.labels.single[v])];
    // 5 members over 4 classes: one class twice, the others once
    EXPECT_EQ(*std::max_element(hist.begin(), hist.end()), 2);
    EXPECT_EQ(*std::min_element(hist.begin(), hist.end()), 1);
  }
}

TEST(sbm, selections_are_nested_in_rho) {
  auto base = sbm_base({});
  auto mp = parse_metapath(base, "author-paper-author");
  std::span<const Metapath> mps(&mp, 1);
  auto lo = sbm_inject(base, mps, {0.3, InjectMode::high, 8});
  auto hi = sbm_inject(base, mps, {0.7, InjectMode::high, 8});
  for (std::size_t v = 0; v < base.num_targets(); ++v)
    if (lo.labels.single[v] != base.labels.single[v]) {
      EXPECT_EQ(hi.labels.single[v], lo.labels.single[v]);
    }
}

TEST(sbm, invalid_rho_rejected) {
  auto base = sbm_base({});
  auto mp = parse_metapath(base, "author-paper-author");
  expect_code(ErrorCode::InvalidConfig, [&] { sbm_inject(base, std::span<const Metapath>(&mp, 1), {1.5, InjectMode::low, 0}); });
}

TEST(bias, closed_form_endpoints_and_grid) {
  auto rows = bias_simulation({0.0, 0.5}, 100, 1);
  EXPECT_NEAR(rows[0].empirical, 0.0, 1e-15);
  EXPECT_NEAR(rows[1].empirical, 1.0, 1e-12);
  std::vector<double> grid;
  for (int k = 1; k <= 9; ++k) grid.push_back(k / 10.0);
  double worst = 0;
  for (const auto& r : bias_simulation(grid, 500, 7)) {
    EXPECT_DOUBLE_EQ(r.closed_form, 4 * r.q * r.q);
    worst = std::max(worst, std::abs(r.empirical - r.closed_form));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(bias, separation_gap_identity) {
  for (auto [q, qt] : std::vector<std::pair<double, double>>{{0.6, 0.2}, {0.9, 0.1}, {0.3, 0.3}, {0.4, 0.0}})
    EXPECT_NEAR(bias_gap(q, qt, 200, 3), 4 * (q * q - qt * qt), 1e-9);
}

TEST(bias, out_of_range_q_rejected) {
  expect_code(ErrorCode::InvalidConfig, [] { bias_simulation({1.2}, 10); });
  expect_code(ErrorCode::InvalidConfig, [] { bias_simulation({0.5}, 0); });
}
