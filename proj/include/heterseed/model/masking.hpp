#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/model/params.hpp"
#include "heterseed/nn/ops.hpp"
#include "heterseed/rng.hpp"

namespace heterseed::model {

enum class MaskMode { train, infer };

/// Counters for instrumenting how often ground-truth label rows are looked up.
struct MaskingStats {
  std::size_t injected = 0;
  std::size_t masked = 0;
  std::size_t ground_truth_reads = 0;
};

inline constexpr std::uint64_t kMaskStream = 0x6D61736BULL;

/// Whether target node v draws the [MASK] token in the given epoch.
inline bool draws_mask(std::uint64_t seed, std::uint64_t epoch, std::size_t v, double beta) {
  return keyed_uniform(seed, {kMaskStream, epoch, v}) < beta;
}

/// x~ = x + g(z~) on rows of labelled training nodes, x elsewhere. `x` holds
/// one row per entry of `nodes` (global target ids); `is_train` is indexed by
/// global target id. g is a linear map without bias.
template <class T>
Var<T> mask_and_inject(nn::Tape<T>& tape, const Var<T>& x, const std::vector<std::size_t>& nodes,
                       const Labels& labels, const std::vector<std::uint8_t>& is_train,
                       const LabelEmbeddingParams<T>& emb, double beta, MaskMode mode, std::uint64_t seed,
                       std::uint64_t epoch, MaskingStats* stats = nullptr) {
  if (beta < 0.0 || beta > 1.0) fail(ErrorCode::InvalidConfig, "beta outside [0, 1]");
  if (x->rows() != nodes.size()) fail(ErrorCode::ShapeMismatch, "mask_and_inject: row count differs from node list");
  auto sel = std::make_shared<nn::SparseRows<T>>();
  sel->cols = emb.num_classes + 1;
  std::vector<std::size_t> rows;
  MaskingStats local;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::size_t v = nodes[i];
    if (v >= is_train.size() || !is_train[v] || !labels.has(v)) continue;
    rows.push_back(i);
    ++local.injected;
    if (mode == MaskMode::train && draws_mask(seed, epoch, v, beta)) {
      ++local.masked;
      sel->push(emb.mask_row(), T(1));
      sel->end_row();
      continue;
    }
    ++local.ground_truth_reads;
    if (labels.mode == LabelMode::single) {
      sel->push(static_cast<std::size_t>(labels.single[v]), T(1));
    } else {
      const auto& active = labels.multi[v];
      std::size_t k = 0;
      for (auto a : active) k += a ? 1 : 0;
      if (k == 0) {
        sel->push(emb.mask_row(), T(1));
      } else {
        for (std::size_t c = 0; c < active.size(); ++c)
          if (active[c]) sel->push(c, T(1) / T(k));
      }
    }
    sel->end_row();
  }
  if (stats) {
    stats->injected += local.injected;
    stats->masked += local.masked;
    stats->ground_truth_reads += local.ground_truth_reads;
  }
  if (rows.empty()) return x;
  auto z = nn::spmm(tape, nn::SparsePtr<T>(sel), emb.table);
  return nn::index_add(tape, x, std::move(rows), nn::matmul(tape, z, emb.proj));
}

}  // namespace heterseed::model
