#include <set>

#include "test_util.hpp"

using namespace heterseed;

using testutil::from_dense;
using testutil::random_counts;

TEST(structural_weights, two_metapaths_by_hand) {
  // node 0: neighbour 1 via p (count 2) and via q (count 1) -> raw 3; neighbour 2 via q (count 1) -> raw 1
  std::vector<InducedGraph> gs{from_dense({{5, 2, 0}, {2, 0, 0}, {0, 0, 0}}, "p"),
                               from_dense({{0, 1, 1}, {1, 0, 0}, {1, 0, 0}}, "q")};
  auto w = structural_weights(gs);
  ASSERT_EQ(w.degree(0), 2u);
  EXPECT_EQ(w.neighbors[0], 1u);
  EXPECT_EQ(w.neighbors[1], 2u);
  EXPECT_DOUBLE_EQ(w.raw[0], 3.0);
  EXPECT_DOUBLE_EQ(w.raw[1], 1.0);
  const double e = std::exp(2.0);
  EXPECT_NEAR(w.normalized[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(w.normalized[1], 1 / (e + 1), 1e-15);
  // self count 5 excluded
  EXPECT_EQ(w.degree(1), 1u);
  EXPECT_DOUBLE_EQ(w.normalized[w.offsets[1]], 1.0);
  EXPECT_EQ(w.degree(2), 1u);
}

TEST(structural_weights, large_counts_do_not_overflow) {
  auto w = structural_weights(std::vector<InducedGraph>{from_dense({{0, 5000, 1}, {5000, 0, 0}, {1, 0, 0}})});
  EXPECT_NEAR(w.normalized[0], 1.0, 1e-12);
  EXPECT_GE(w.normalized[1], 0.0);
}

TEST(structural_weights, property_rows_sum_to_one_and_order_preserved) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> nd(2, 12), pd(1, 3);
    const std::size_t n = nd(rng);
    std::vector<InducedGraph> gs;
    for (std::size_t k = pd(rng); k > 0; --k) gs.push_back(from_dense(random_counts(rng, n)));
    auto w = structural_weights(gs);
    for (std::size_t v = 0; v < n; ++v) {
      if (w.degree(v) == 0) continue;
      double s = 0;
      for (std::size_t a = w.offsets[v]; a < w.offsets[v + 1]; ++a) {
        s += w.normalized[a];
        EXPECT_NE(w.neighbors[a], v);
        for (std::size_t b = w.offsets[v]; b < w.offsets[v + 1]; ++b) {
          if (w.raw[a] < w.raw[b]) {
            EXPECT_LT(w.normalized[a], w.normalized[b]);
          }
          if (w.raw[a] == w.raw[b]) {
            EXPECT_EQ(w.normalized[a], w.normalized[b]);
          }
        }
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(partition, splits_union_by_label_equality) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10;
    auto w = structural_weights(std::vector<InducedGraph>{from_dense(random_counts(rng, n))});
    std::uniform_int_distribution<int> ld(0, 2);
    std::vector<std::int32_t> y(n);
    for (auto& x : y) x = ld(rng);
    auto p = partition_neighbors(w, y);
    for (std::size_t v = 0; v < n; ++v) {
      std::multiset<std::size_t> all, homo, hetero;
      for (std::size_t k = w.offsets[v]; k < w.offsets[v + 1]; ++k) all.insert(w.neighbors[k]);
      for (std::size_t k = p.homo.offsets[v]; k < p.homo.offsets[v + 1]; ++k) {
        homo.insert(p.homo.neighbors[k]);
        EXPECT_EQ(y[p.homo.neighbors[k]], y[v]);
      }
      for (std::size_t k = p.hetero.offsets[v]; k < p.hetero.offsets[v + 1]; ++k) {
        hetero.insert(p.hetero.neighbors[k]);
        EXPECT_NE(y[p.hetero.neighbors[k]], y[v]);
      }
      std::multiset<std::size_t> joined = homo;
      joined.insert(hetero.begin(), hetero.end());
      EXPECT_EQ(joined, all);
    }
  }
}

TEST(partition, weights_are_not_renormalised_per_branch) {
  auto w = structural_weights(std::vector<InducedGraph>{from_dense({{0, 1, 1}, {1, 0, 0}, {1, 0, 0}})});
  std::vector<std::int32_t> y{0, 0, 1};
  auto p = partition_neighbors(w, y);
  ASSERT_EQ(p.homo.degree(0), 1u);
  EXPECT_DOUBLE_EQ(p.homo.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(p.hetero.weights[p.hetero.offsets[0]], 0.5);
}

TEST(partition, pseudo_label_size_checked) {
  auto w = structural_weights(std::vector<InducedGraph>{from_dense({{0, 1}, {1, 0}})});
  std::vector<std::int32_t> y{0};
  EXPECT_THROW(partition_neighbors(w, y), Error);
}

TEST(homophily, global_and_local_by_hand) {
  // path 0-1-2-3 with labels 0,0,1,1: edges (directed) 6, same 4
  auto ig = from_dense({{0, 1, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {0, 0, 1, 0}});
  auto y = Labels::make_single(2, {0, 0, 1, 1});
  EXPECT_DOUBLE_EQ(global_homophily(ig, y), 4.0 / 6.0);
  auto local = local_homophily(ig, y);
  EXPECT_DOUBLE_EQ(*local[0], 1.0);
  EXPECT_DOUBLE_EQ(*local[1], 0.5);
  std::vector<double> per{0.2, 0.4};
  EXPECT_DOUBLE_EQ(average_homophily(per), 0.3);
}

TEST(homophily, unlabeled_endpoints_skipped_and_empty_set_errors) {
  auto ig = from_dense({{0, 1}, {1, 0}});
  auto y = Labels::make_single(2, {0, -1});
  try {
    global_homophily(ig, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyEdgeSet);
  }
  EXPECT_FALSE(local_homophily(ig, y)[0].has_value());
  try {
    average_homophily({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyList);
  }
}

TEST(homophily, bins_boundaries) {
  EXPECT_EQ(homophily_bin(0.0), 0u);
  EXPECT_EQ(homophily_bin(0.2), 0u);
  EXPECT_EQ(homophily_bin(0.2000001), 1u);
  EXPECT_EQ(homophily_bin(0.6), 2u);
  EXPECT_EQ(homophily_bin(0.81), 4u);
  EXPECT_EQ(homophily_bin(1.0), 4u);
}

TEST(homophily, union_local_homophily_counts_each_neighbour_once) {
  std::vector<InducedGraph> gs{from_dense({{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}), from_dense({{0, 1, 1}, {1, 0, 0}, {1, 0, 0}})};
  auto y = Labels::make_single(2, {0, 0, 1});
  auto local = local_homophily(gs, y);
  EXPECT_DOUBLE_EQ(*local[0], 0.5);
  EXPECT_DOUBLE_EQ(*local[2], 0.0);
}

TEST(homophily, least_squares_exact_line) {
  std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  auto f = least_squares(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(homophily, similarity_report_needs_features) {
  auto g = testutil::toy_graph(1);
  std::vector<InducedGraph> gs{build_induced_graph(g, parse_metapath(g, "has,tagged"))};
  auto rep = similarity_vs_homophily(g, gs);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_GT(rep.rows[0].num_edges, 0u);
  EXPECT_LE(std::abs(rep.rows[0].mean_cosine), 1.0);
  g.features[0].reset();
  try {
    similarity_vs_homophily(g, gs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFeatures);
  }
}
