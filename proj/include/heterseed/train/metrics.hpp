#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "heterseed/error.hpp"

namespace heterseed::train {

struct Metrics {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double average_precision = 0.0;
};

inline double f1_from_counts(double tp, double fp, double fn) {
  const double denom = 2.0 * tp + fp + fn;
  return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

/// Per-class counts for single-label predictions.
struct ClassCounts {
  std::vector<double> tp, fp, fn;
};

inline ClassCounts count_single(const std::vector<std::int32_t>& truth, const std::vector<std::int32_t>& pred,
                                std::size_t num_classes) {
  if (truth.size() != pred.size()) fail(ErrorCode::ShapeMismatch, "prediction count differs from label count");
  ClassCounts c{std::vector<double>(num_classes), std::vector<double>(num_classes), std::vector<double>(num_classes)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(pred[i]);
    if (t >= num_classes || p >= num_classes) fail(ErrorCode::IndexOutOfRange, "class index out of range");
    if (t == p) {
      c.tp[t] += 1;
    } else {
      c.fp[p] += 1;
      c.fn[t] += 1;
    }
  }
  return c;
}

inline double macro_f1(const ClassCounts& c) {
  if (c.tp.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < c.tp.size(); ++k) s += f1_from_counts(c.tp[k], c.fp[k], c.fn[k]);
  return s / static_cast<double>(c.tp.size());
}

inline double micro_f1(const ClassCounts& c) {
  auto total = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); };
  return f1_from_counts(total(c.tp), total(c.fp), total(c.fn));
}

/// Average precision of a binary ranking: sum over distinct score thresholds of
/// (R_k - R_{k-1}) P_k. Returns 0 when there are no positives.
inline double average_precision(const std::vector<double>& scores, const std::vector<std::uint8_t>& positive) {
  if (scores.size() != positive.size()) fail(ErrorCode::ShapeMismatch, "score count differs from label count");
  const double total_pos = static_cast<double>(std::count_if(positive.begin(), positive.end(), [](auto p) { return p != 0; }));
  if (total_pos == 0.0) return 0.0;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0.0, seen = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    tp += positive[order[i]] ? 1.0 : 0.0;
    seen += 1.0;
    // Tied scores form a single threshold.
    if (i + 1 < order.size() && scores[order[i + 1]] == scores[order[i]]) continue;
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
  }
  return ap;
}

template <class T>
std::vector<double> softmax_row(const T* x, std::size_t c) {
  std::vector<double> p(c);
  double mx = -INFINITY;
  for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, static_cast<double>(x[j]));
  double s = 0.0;
  for (std::size_t j = 0; j < c; ++j) s += p[j] = std::exp(static_cast<double>(x[j]) - mx);
  for (auto& v : p) v /= s;
  return p;
}

/// Single-label metrics from per-node class scores (rows x C, row-major).
/// Binary tasks rank by the class-1 probability; otherwise AP is the mean
/// one-vs-rest AP over classes with at least one positive.
inline Metrics single_label_metrics(const std::vector<std::vector<double>>& probs, const std::vector<std::int32_t>& truth,
                                    std::size_t num_classes) {
  if (truth.empty()) fail(ErrorCode::EmptySplit, "no nodes to evaluate");
  std::vector<std::int32_t> pred(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i)
    pred[i] = static_cast<std::int32_t>(std::max_element(probs[i].begin(), probs[i].end()) - probs[i].begin());
  const auto counts = count_single(truth, pred, num_classes);
  Metrics m{macro_f1(counts), micro_f1(counts), 0.0};
  auto class_ap = [&](std::size_t c) {
    std::vector<double> s(truth.size());
    std::vector<std::uint8_t> pos(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
      s[i] = probs[i][c];
      pos[i] = truth[i] == static_cast<std::int32_t>(c);
    }
    return average_precision(s, pos);
  };
  if (num_classes == 2) {
    m.average_precision = class_ap(1);
  } else {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (std::find(truth.begin(), truth.end(), static_cast<std::int32_t>(c)) == truth.end()) continue;
      sum += class_ap(c);
      ++used;
    }
    m.average_precision = used ? sum / static_cast<double>(used) : 0.0;
  }
  return m;
}

/// Multi-label metrics; a class is predicted when its logit is positive.
inline Metrics multi_label_metrics(const std::vector<std::vector<double>>& logits,
                                   const std::vector<std::vector<std::uint8_t>>& truth, std::size_t num_classes) {
  if (truth.empty()) fail(ErrorCode::EmptySplit, "no nodes to evaluate");
  ClassCounts c{std::vector<double>(num_classes), std::vector<double>(num_classes), std::vector<double>(num_classes)};
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t k = 0; k < num_classes; ++k) {
      const bool p = logits[i][k] > 0.0;
      const bool t = k < truth[i].size() && truth[i][k];
      if (p && t) c.tp[k] += 1;
      if (p && !t) c.fp[k] += 1;
      if (!p && t) c.fn[k] += 1;
    }
  Metrics m{macro_f1(c), micro_f1(c), 0.0};
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    std::vector<double> s(truth.size());
    std::vector<std::uint8_t> pos(truth.size());
    bool any = false;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      s[i] = logits[i][k];
      pos[i] = k < truth[i].size() && truth[i][k];
      any = any || pos[i];
    }
    if (!any) continue;
    sum += average_precision(s, pos);
    ++used;
  }
  m.average_precision = used ? sum / static_cast<double>(used) : 0.0;
  return m;
}

}  // namespace heterseed::train
