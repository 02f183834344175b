#include "dense.hpp"
#include "test_util.hpp"

using namespace heterseed;
using namespace heterseed::model;
using nn::Var;

namespace {

Var<double> random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return nn::make_var<double>({rows, cols}, v);
}

Var<double> random_param(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  auto v = random_matrix(rows, cols, seed);
  v->requires_grad = true;
  return v;
}

StructuralChannelParams<double> random_params(std::size_t d, std::uint64_t seed) {
  StructuralChannelParams<double> p;
  auto mlp = [&](std::uint64_t s) {
    return Mlp<double>{random_param(d, d, s), random_param(1, d, s + 1), random_param(d, d, s + 2), random_param(1, d, s + 3)};
  };
  p.homo = mlp(seed * 10);
  p.hetero = mlp(seed * 10 + 5);
  p.gate_w = random_param(2 * d, d, seed * 10 + 9);
  p.gate_b = random_param(1, d, seed * 10 + 11);
  return p;
}

ModelConfig no_dropout() {
  ModelConfig cfg;
  cfg.dropout = 0.0;
  return cfg;
}

dense::Mat mlp_oracle(const Mlp<double>& m, const dense::Mat& x) {
  return dense::add_row(dense::matmul(dense::relu(dense::add_row(dense::matmul(x, m.w1), m.b1)), m.w2), m.b2);
}

StructuralOutput<double> run_fuse(const Var<double>& a, const Var<double>& b, const StructuralChannelParams<double>& p,
                                  const ModelConfig& cfg = no_dropout()) {
  nn::Tape<double> tape(false);
  Rng rng(0);
  return structural_fuse(tape, a, b, p, cfg, rng, false);
}

Branch branch_of(std::vector<std::vector<std::pair<std::size_t, double>>> rows) {
  Branch b;
  for (const auto& r : rows) {
    for (auto [u, w] : r) {
      b.neighbors.push_back(u);
      b.weights.push_back(w);
    }
    b.offsets.push_back(b.neighbors.size());
  }
  return b;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST(branch_aggregate, single_homophilic_neighbour) {
  Partition part{branch_of({{{1, 1.0}}, {{0, 1.0}}}), branch_of({{}, {}})};
  auto x = random_matrix(2, 3, 1);
  nn::Tape<double> tape(false);
  auto [homo, hetero] = branch_aggregate(tape, x, branch_matrices<double>(part, iota(2), iota(2)));
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(homo->values[j], x->values[3 + j]);
    EXPECT_EQ(hetero->values[j], 0.0);
  }
}

TEST(branch_aggregate, all_heterophilic_node_has_zero_homo_row) {
  Partition part{branch_of({{}, {}, {}}), branch_of({{{1, 0.25}, {2, 0.75}}, {}, {}})};
  auto x = random_matrix(3, 2, 2);
  nn::Tape<double> tape(false);
  auto [homo, hetero] = branch_aggregate(tape, x, branch_matrices<double>(part, iota(3), iota(3)));
  EXPECT_EQ(homo->values[0], 0.0);
  EXPECT_EQ(homo->values[1], 0.0);
  EXPECT_NEAR(hetero->values[0], 0.25 * x->values[2] + 0.75 * x->values[4], 1e-15);
}

TEST(branch_aggregate, random_case_matches_dense_masked_oracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10, d = 3;
    auto w = structural_weights(std::vector<InducedGraph>{testutil::from_dense(testutil::random_counts(rng, n))});
    std::uniform_int_distribution<int> ld(0, 2);
    std::vector<std::int32_t> y(n);
    for (auto& v : y) v = ld(rng);
    auto part = partition_neighbors(w, y);
    dense::Mat wh(n, std::vector<double>(n, 0.0)), we = wh;
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t k = w.offsets[v]; k < w.offsets[v + 1]; ++k)
        (y[w.neighbors[k]] == y[v] ? wh : we)[v][w.neighbors[k]] = w.normalized[k];
    auto x = random_matrix(n, d, trial);
    nn::Tape<double> tape(false);
    auto [homo, hetero] = branch_aggregate(tape, x, branch_matrices<double>(part, iota(n), iota(n)));
    auto eh = dense::matmul(wh, dense::of(x)), ee = dense::matmul(we, dense::of(x));
    auto gh = dense::of(homo), ge = dense::of(hetero);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t j = 0; j < d; ++j) {
        EXPECT_NEAR(gh[v][j], eh[v][j], 1e-12);
        EXPECT_NEAR(ge[v][j], ee[v][j], 1e-12);
      }
  }
}

TEST(branch_aggregate, subset_rows_map_by_global_id) {
  Partition part{branch_of({{{2, 1.0}}, {}, {{0, 1.0}}}), branch_of({{}, {}, {}})};
  auto m = branch_matrix<double>(part.homo, {2}, {0, 2});
  ASSERT_EQ(m->rows, 1u);
  EXPECT_EQ(m->indices[0], 0u);
  try {
    branch_matrix<double>(part.homo, {0}, {0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
  try {
    branch_matrix<double>(part.homo, {7}, iota(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(structural_fuse, matches_straight_line_oracle) {
  const std::size_t n = 6, d = 4;
  auto p = random_params(d, 3);
  auto a = random_matrix(n, d, 4), b = random_matrix(n, d, 5);
  auto out = run_fuse(a, b, p);
  auto th = mlp_oracle(p.homo, dense::of(a)), te = mlp_oracle(p.hetero, dense::of(b));
  auto z = dense::add_row(dense::matmul(dense::concat(th, te), p.gate_w), p.gate_b);
  auto got = dense::of(out.h);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t j = 0; j < d; ++j) {
      const double s = dense::sigmoid(z[v][j]);
      EXPECT_NEAR(got[v][j], s * th[v][j] + (1 - s) * te[v][j], 1e-12);
    }
}

TEST(structural_fuse, saturated_gate_selects_homo_branch) {
  auto p = random_params(3, 4);
  for (auto& v : p.gate_w->values) v = 0.0;
  for (auto& v : p.gate_b->values) v = 1e3;
  auto a = random_matrix(5, 3, 1), b = random_matrix(5, 3, 2);
  auto out = run_fuse(a, b, p);
  for (std::size_t i = 0; i < out.h->size(); ++i) EXPECT_NEAR(out.h->values[i], out.t_homo->values[i], 1e-12);
}

TEST(structural_fuse, zero_gate_averages_branches) {
  auto p = random_params(3, 5);
  for (auto& v : p.gate_w->values) v = 0.0;
  for (auto& v : p.gate_b->values) v = 0.0;
  auto out = run_fuse(random_matrix(4, 3, 1), random_matrix(4, 3, 2), p);
  for (std::size_t i = 0; i < out.h->size(); ++i)
    EXPECT_NEAR(out.h->values[i], 0.5 * out.t_homo->values[i] + 0.5 * out.t_hetero->values[i], 1e-15);
}

TEST(structural_fuse, gate_values_strictly_inside_unit_interval) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto out = run_fuse(random_matrix(8, 4, s), random_matrix(8, 4, s + 100), random_params(4, s));
    for (double z : out.gate_pre->values) {
      const double g = dense::sigmoid(z);
      EXPECT_GT(g, 0.0);
      EXPECT_LT(g, 1.0);
    }
  }
}

TEST(structural_fuse, branch_swap_symmetry) {
  const std::size_t d = 3;
  auto p = random_params(d, 6);
  auto a = random_matrix(5, d, 7), b = random_matrix(5, d, 8);
  // Swap the MLPs, swap the two input halves of the gate map and negate it: z -> -z.
  StructuralChannelParams<double> q;
  q.homo = p.hetero;
  q.hetero = p.homo;
  std::vector<double> w(2 * d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      w[i * d + j] = -p.gate_w->values[(d + i) * d + j];
      w[(d + i) * d + j] = -p.gate_w->values[i * d + j];
    }
  q.gate_w = nn::make_param<double>({2 * d, d}, w);
  std::vector<double> bias(p.gate_b->values);
  for (auto& x : bias) x = -x;
  q.gate_b = nn::make_param<double>({1, d}, bias);
  auto x = run_fuse(a, b, p), y = run_fuse(b, a, q);
  for (std::size_t i = 0; i < x.gate_pre->size(); ++i) EXPECT_NEAR(y.gate_pre->values[i], -x.gate_pre->values[i], 1e-12);
  for (std::size_t i = 0; i < x.h->size(); ++i) EXPECT_NEAR(x.h->values[i], y.h->values[i], 1e-12);
}

TEST(structural_fuse, zeroed_heterophilic_weights_ignore_heterophilic_features) {
  std::mt19937_64 rng(3);
  const std::size_t n = 10, d = 3;
  auto w = structural_weights(std::vector<InducedGraph>{testutil::from_dense(testutil::random_counts(rng, n))});
  std::vector<std::int32_t> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  auto part = partition_neighbors(w, y);
  for (auto& x : part.hetero.weights) x = 0.0;
  auto m = branch_matrices<double>(part, iota(n), iota(n));
  auto p = random_params(d, 9);
  auto eval = [&](const Var<double>& x) {
    nn::Tape<double> tape(false);
    auto [homo, hetero] = branch_aggregate(tape, x, m);
    return run_fuse(homo, hetero, p).h;
  };
  auto x = random_matrix(n, d, 1);
  auto base = eval(x);
  for (std::size_t v = 0; v < n; ++v) {
    // perturb every node outside v's homophilic neighbourhood
    std::vector<char> keep(n, 0);
    for (std::size_t k = part.homo.offsets[v]; k < part.homo.offsets[v + 1]; ++k) keep[part.homo.neighbors[k]] = 1;
    auto xp = nn::make_var<double>(x->shape, x->values);
    for (std::size_t u = 0; u < n; ++u)
      if (!keep[u])
        for (std::size_t j = 0; j < d; ++j) xp->values[u * d + j] += 5.0 + static_cast<double>(u);
    auto h = eval(xp);
    for (std::size_t j = 0; j < d; ++j) EXPECT_EQ(h->values[v * d + j], base->values[v * d + j]);
  }
}

TEST(structural_fuse, single_branch_and_config_errors) {
  auto p = random_params(3, 2);
  auto a = random_matrix(4, 3, 1), b = random_matrix(4, 3, 2);
  auto cfg = no_dropout();
  cfg.hetero_branch = false;
  auto out = run_fuse(a, b, p, cfg);
  EXPECT_EQ(out.h, out.t_homo);
  EXPECT_FALSE(out.gate_pre);
  cfg.homo_branch = false;
  try {
    run_fuse(a, b, p, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  try {
    run_fuse(a, random_matrix(3, 3, 1), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(structural_fuse, gradients_match_finite_differences) {
  const std::size_t d = 3;
  auto p = random_params(d, 7);
  auto a = random_param(5, d, 1), b = random_param(5, d, 2);
  nn::ParamStore<double> store;
  store.add("a", a);
  store.add("b", b);
  store.add("homo.w1", p.homo.w1);
  store.add("hetero.w2", p.hetero.w2);
  store.add("gate_w", p.gate_w);
  store.add("gate_b", p.gate_b);
  auto loss = [&](bool record) {
    nn::Tape<double> tape(record);
    Rng rng(0);
    auto out = structural_fuse(tape, a, b, p, no_dropout(), rng, false);
    auto l = nn::sum(tape, nn::mul(tape, out.h, out.h));
    if (record) tape.backward(l);
    return l->item();
  };
  auto r = testutil::grad_check(store, loss);
  EXPECT_LT(r.worst_rel, 1e-5) << r.worst_name;
}
