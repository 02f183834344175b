#include "test_util.hpp"

using namespace heterseed;
using namespace heterseed::model;
using nn::Var;

namespace {

struct Bench {
  HetGraph g = testutil::toy_graph(2, 12, 4);
  HeterSeedParams<double> p;
  std::vector<std::uint8_t> is_train;
  std::vector<std::size_t> nodes;
  Var<double> x;

  Bench() {
    ModelConfig cfg;
    cfg.hidden_dim = 4;
    p = HeterSeedParams<double>::init(g, cfg, 3);
    is_train.assign(g.num_targets(), 0);
    for (auto v : g.splits.train) is_train[v] = 1;
    for (std::size_t v = 0; v < g.num_targets(); ++v) nodes.push_back(v);
    Rng rng(5);
    std::vector<double> vals(g.num_targets() * 4);
    for (auto& v : vals) v = rng.uniform(-1.0, 1.0);
    x = nn::make_var<double>({g.num_targets(), 4}, vals);
  }

  Var<double> run(double beta, MaskMode mode, std::uint64_t epoch, MaskingStats* stats = nullptr,
                  const Labels* labels = nullptr) {
    nn::Tape<double> tape(false);
    return mask_and_inject(tape, x, nodes, labels ? *labels : g.labels, is_train, p.label, beta, mode, 7, epoch, stats);
  }

  /// g(Z[row]) for one row of the label table.
  std::vector<double> injected(std::size_t row) const {
    const std::size_t d = p.label.proj->cols();
    std::vector<double> out(d, 0.0);
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = 0; j < d; ++j) out[j] += p.label.table->values[row * d + k] * p.label.proj->values[k * d + j];
    return out;
  }
};

}  // namespace

TEST(masking, beta_one_never_reads_ground_truth) {
  Bench s;
  for (std::uint64_t epoch = 0; epoch < 5; ++epoch) {
    MaskingStats st;
    auto out = s.run(1.0, MaskMode::train, epoch, &st);
    EXPECT_EQ(st.ground_truth_reads, 0u);
    EXPECT_EQ(st.masked, s.g.splits.train.size());
    auto m = s.injected(s.p.label.mask_row());
    for (auto v : s.g.splits.train)
      for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out->values[v * 4 + j], s.x->values[v * 4 + j] + m[j], 1e-12);
  }
}

TEST(masking, beta_zero_train_equals_infer) {
  Bench s;
  auto a = s.run(0.0, MaskMode::train, 3), b = s.run(0.0, MaskMode::infer, 0);
  EXPECT_EQ(a->values, b->values);
  for (auto v : s.g.splits.train) {
    auto e = s.injected(static_cast<std::size_t>(s.g.labels.single[v]));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(b->values[v * 4 + j], s.x->values[v * 4 + j] + e[j], 1e-12);
  }
}

TEST(masking, mask_fraction_matches_beta) {
  std::size_t hits = 0;
  const std::size_t n = 10000;
  for (std::size_t v = 0; v < n; ++v) hits += draws_mask(42, 0, v, 0.7);
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.7, 0.02);
  hits = 0;
  for (std::size_t e = 0; e < n; ++e) hits += draws_mask(42, e, 3, 0.7);
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.7, 0.02);
}

TEST(masking, rows_outside_train_set_bitwise_unchanged) {
  Bench s;
  for (auto mode : {MaskMode::train, MaskMode::infer}) {
    auto out = s.run(0.5, mode, 1);
    for (std::size_t v = 0; v < s.g.num_targets(); ++v) {
      if (s.is_train[v]) continue;
      for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(out->values[v * 4 + j], s.x->values[v * 4 + j]);
    }
  }
}

TEST(masking, unlabeled_train_nodes_receive_nothing) {
  Bench s;
  auto labels = s.g.labels;
  const auto v = s.g.splits.train.front();
  labels.single[v] = -1;
  MaskingStats st;
  auto out = s.run(0.0, MaskMode::train, 0, &st, &labels);
  EXPECT_EQ(st.injected, s.g.splits.train.size() - 1);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(out->values[v * 4 + j], s.x->values[v * 4 + j]);
}

TEST(masking, infer_is_deterministic) {
  Bench s;
  auto a = s.run(0.7, MaskMode::infer, 0), b = s.run(0.7, MaskMode::infer, 99);
  EXPECT_EQ(a->values, b->values);
}

TEST(masking, train_draws_reproducible_per_epoch) {
  Bench s;
  EXPECT_EQ(s.run(0.5, MaskMode::train, 4)->values, s.run(0.5, MaskMode::train, 4)->values);
}

TEST(masking, flipping_held_out_labels_changes_nothing) {
  Bench s;
  auto flipped = s.g.labels;
  for (auto* split : {&s.g.splits.val, &s.g.splits.test})
    for (auto v : *split) flipped.single[v] = (flipped.single[v] + 1) % 3;
  for (auto mode : {MaskMode::train, MaskMode::infer}) {
    auto a = s.run(0.4, mode, 2), b = s.run(0.4, mode, 2, nullptr, &flipped);
    EXPECT_EQ(a->values, b->values);
  }
}

TEST(masking, multi_label_rows_average_active_classes) {
  Bench s;
  Labels ml;
  ml.mode = LabelMode::multi;
  ml.num_classes = 3;
  ml.multi.assign(s.g.num_targets(), {0, 0, 0});
  const auto a = s.g.splits.train[0], b = s.g.splits.train[1];
  ml.multi[a] = {1, 0, 1};  // b has no active class
  auto out = s.run(0.0, MaskMode::infer, 0, nullptr, &ml);
  auto z0 = s.injected(0), z2 = s.injected(2), zm = s.injected(s.p.label.mask_row());
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(out->values[a * 4 + j], s.x->values[a * 4 + j] + 0.5 * (z0[j] + z2[j]), 1e-12);
    EXPECT_NEAR(out->values[b * 4 + j], s.x->values[b * 4 + j] + zm[j], 1e-12);
  }
}

TEST(masking, beta_outside_unit_interval_rejected) {
  Bench s;
  EXPECT_THROW(s.run(1.5, MaskMode::train, 0), Error);
}

TEST(masking, gradients_reach_label_table_and_projection) {
  Bench s;
  nn::ParamStore<double> store;
  store.add("table", s.p.label.table);
  store.add("proj", s.p.label.proj);
  auto loss = [&](bool record) {
    nn::Tape<double> tape(record);
    auto out = mask_and_inject(tape, s.x, s.nodes, s.g.labels, s.is_train, s.p.label, 0.5, MaskMode::train, 7, 1);
    auto l = nn::sum(tape, nn::mul(tape, out, out));
    if (record) tape.backward(l);
    return l->item();
  };
  auto r = testutil::grad_check(store, loss);
  EXPECT_LT(r.worst_rel, 1e-6) << r.worst_name;
}
