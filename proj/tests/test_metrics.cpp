#include <numeric>

#include "test_util.hpp"

using namespace heterseed;
using namespace heterseed::train;

namespace {

struct Frac {
  std::int64_t num = 0, den = 1;
  Frac(std::int64_t n = 0, std::int64_t d = 1) : num(n), den(d) { reduce(); }
  void reduce() {
    const auto g = std::gcd(num, den);
    if (g) num /= g, den /= g;
  }
  friend Frac operator+(Frac a, Frac b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Macro and micro F1 straight from a confusion matrix, in exact arithmetic.
std::pair<Frac, Frac> f1_oracle(const std::vector<std::vector<std::int64_t>>& cm) {
  const std::size_t c = cm.size();
  Frac macro;
  std::int64_t tp_all = 0, fp_all = 0, fn_all = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::int64_t tp = cm[k][k], fp = 0, fn = 0;
    for (std::size_t j = 0; j < c; ++j)
      if (j != k) {
        fn += cm[k][j];
        fp += cm[j][k];
      }
    if (2 * tp + fp + fn > 0) macro = macro + Frac(2 * tp, (2 * tp + fp + fn) * static_cast<std::int64_t>(c));
    tp_all += tp, fp_all += fp, fn_all += fn;
  }
  const std::int64_t d = 2 * tp_all + fp_all + fn_all;
  return {macro, d ? Frac(2 * tp_all, d) : Frac(0)};
}

/// Mean over positives of precision at that positive's score threshold.
double ap_oracle(const std::vector<double>& s, const std::vector<std::uint8_t>& pos) {
  double total = 0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    ++npos;
    double above = 0, above_pos = 0;
    for (std::size_t j = 0; j < s.size(); ++j)
      if (s[j] >= s[i]) {
        above += 1;
        above_pos += pos[j];
      }
    total += above_pos / above;
  }
  return npos ? total / static_cast<double>(npos) : 0.0;
}

std::vector<std::vector<double>> one_hot(const std::vector<std::int32_t>& pred, std::size_t c) {
  std::vector<std::vector<double>> out;
  for (auto p : pred) {
    std::vector<double> row(c, 0.0);
    row[static_cast<std::size_t>(p)] = 1.0;
    out.push_back(row);
  }
  return out;
}

}  // namespace

TEST(metrics, hand_confusion_matrix_two_thirds) {
  // rows truth, cols prediction: [[2,1],[1,2]]
  std::vector<std::int32_t> truth{0, 0, 0, 1, 1, 1}, pred{0, 0, 1, 0, 1, 1};
  auto c = count_single(truth, pred, 2);
  EXPECT_NEAR(macro_f1(c), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(micro_f1(c), 2.0 / 3.0, 1e-15);
}

TEST(metrics, perfect_predictions_score_one) {
  std::vector<std::int32_t> truth{0, 1, 2, 2, 1};
  auto m = single_label_metrics(one_hot(truth, 3), truth, 3);
  EXPECT_DOUBLE_EQ(m.macro_f1, 1.0);
  EXPECT_DOUBLE_EQ(m.micro_f1, 1.0);
  EXPECT_DOUBLE_EQ(m.average_precision, 1.0);
}

TEST(metrics, random_predictions_match_exact_oracle) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> cd(2, 5), nd(1, 40);
    const std::size_t c = static_cast<std::size_t>(cd(rng)), n = static_cast<std::size_t>(nd(rng));
    std::uniform_int_distribution<std::int32_t> ld(0, static_cast<std::int32_t>(c) - 1);
    std::vector<std::int32_t> truth(n), pred(n);
    std::vector<std::vector<std::int64_t>> cm(c, std::vector<std::int64_t>(c, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = ld(rng);
      pred[i] = ld(rng);
      ++cm[truth[i]][pred[i]];
      correct += truth[i] == pred[i];
    }
    auto [macro, micro] = f1_oracle(cm);
    auto counts = count_single(truth, pred, c);
    EXPECT_NEAR(macro_f1(counts), macro.value(), 1e-12);
    EXPECT_NEAR(micro_f1(counts), micro.value(), 1e-12);
    // single-label micro-F1 is accuracy
    EXPECT_NEAR(micro_f1(counts), static_cast<double>(correct) / static_cast<double>(n), 1e-12);
  }
}

TEST(metrics, absent_classes_contribute_zero_to_macro) {
  std::vector<std::int32_t> truth{0, 0}, pred{0, 0};
  auto c = count_single(truth, pred, 4);
  EXPECT_DOUBLE_EQ(macro_f1(c), 0.25);
}

TEST(metrics, average_precision_by_hand) {
  // ranking + - + -: P@1 = 1, P@3 = 2/3
  EXPECT_NEAR(average_precision({0.9, 0.8, 0.7, 0.1}, {1, 0, 1, 0}), 5.0 / 6.0, 1e-15);
  EXPECT_DOUBLE_EQ(average_precision({0.2, 0.1}, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({0.2, 0.1}, {0, 0}), 0.0);
  // All tied: one threshold, precision = positive rate.
  EXPECT_NEAR(average_precision({0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 1}), 0.5, 1e-15);
}

TEST(metrics, average_precision_random_matches_oracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> nd(1, 30), sd(0, 6), bd(0, 1);
    const std::size_t n = static_cast<std::size_t>(nd(rng));
    std::vector<double> s(n);
    std::vector<std::uint8_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = sd(rng) / 6.0;  // coarse grid forces ties
      pos[i] = static_cast<std::uint8_t>(bd(rng));
    }
    EXPECT_NEAR(average_precision(s, pos), ap_oracle(s, pos), 1e-12);
  }
}

TEST(metrics, multiclass_ap_averages_present_classes) {
  std::vector<std::vector<double>> probs{{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}, {0.5, 0.4, 0.1}};
  std::vector<std::int32_t> truth{0, 1, 1};
  auto m = single_label_metrics(probs, truth, 3);
  const double ap0 = ap_oracle({0.7, 0.1, 0.5}, {1, 0, 0});
  const double ap1 = ap_oracle({0.2, 0.8, 0.4}, {0, 1, 1});
  EXPECT_NEAR(m.average_precision, (ap0 + ap1) / 2, 1e-15);
}

TEST(metrics, binary_ap_uses_positive_class_score) {
  std::vector<std::vector<double>> probs{{0.9, 0.1}, {0.3, 0.7}, {0.6, 0.4}, {0.2, 0.8}};
  std::vector<std::int32_t> truth{0, 1, 1, 0};
  auto m = single_label_metrics(probs, truth, 2);
  EXPECT_NEAR(m.average_precision, ap_oracle({0.1, 0.7, 0.4, 0.8}, {0, 1, 1, 0}), 1e-15);
}

TEST(metrics, multi_label_thresholds_logits_at_zero) {
  std::vector<std::vector<double>> logits{{1.0, -1.0}, {0.5, 0.5}, {-2.0, 3.0}};
  std::vector<std::vector<std::uint8_t>> truth{{1, 0}, {1, 0}, {0, 1}};
  auto m = multi_label_metrics(logits, truth, 2);
  // class 0: tp 2, fp 0, fn 0; class 1: tp 1, fp 1, fn 0
  EXPECT_NEAR(m.macro_f1, (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(m.micro_f1, 6.0 / 7.0, 1e-15);
}

TEST(metrics, empty_split_rejected) {
  try {
    single_label_metrics({}, {}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySplit);
  }
  EXPECT_THROW(multi_label_metrics({}, {}, 2), Error);
}
