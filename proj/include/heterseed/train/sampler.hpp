#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/model/semantic.hpp"
#include "heterseed/model/structural.hpp"
#include "heterseed/rng.hpp"
#include "heterseed/structure.hpp"

namespace heterseed::train {

template <class T>
struct Batch {
  model::SemanticPlan<T> plan;
  model::BranchMatrices<T> branches;
};

namespace detail {

inline void sort_unique(std::vector<std::size_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

inline std::size_t position(const std::vector<std::size_t>& sorted, std::size_t x) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
  if (it == sorted.end() || *it != x) fail(ErrorCode::IndexOutOfRange, "node " + std::to_string(x) + " missing from sampled set");
  return static_cast<std::size_t>(it - sorted.begin());
}

/// Positions of up to k in-edge entries of v, uniformly without replacement, in CSR order.
inline std::vector<std::size_t> sample_entries(const Csr& in, std::size_t v, std::size_t k, Rng& rng) {
  const std::size_t deg = in.degree(v);
  std::vector<std::size_t> pos(deg);
  std::iota(pos.begin(), pos.end(), in.begin(v));
  if (deg <= k) return pos;
  for (std::size_t i = 0; i < k; ++i) std::swap(pos[i], pos[i + rng.below(deg - i)]);
  pos.resize(k);
  std::sort(pos.begin(), pos.end());
  return pos;
}

}  // namespace detail

/// Receptive field of `outputs` (sorted target ids) under per-hop uniform
/// neighbour sampling. The layer-0 target set also contains every structural
/// neighbour of the outputs so the structural channel sees its full lists.
template <class T>
Batch<T> build_batch(const HetGraph& g, std::vector<std::size_t> outputs, const std::vector<std::size_t>& fanout,
                     const Partition& partition, Rng& rng) {
  const std::size_t layers = fanout.size();
  if (layers == 0) fail(ErrorCode::InvalidConfig, "fanout must list one entry per layer");
  detail::sort_unique(outputs);
  const std::size_t nt = g.num_types(), nr = g.num_relations(), tgt = g.target();

  std::vector<std::vector<std::vector<std::size_t>>> sets(layers + 1, std::vector<std::vector<std::size_t>>(nt));
  sets[layers][tgt] = outputs;
  Batch<T> batch;
  batch.plan.layers.resize(layers);

  for (std::size_t l = layers; l >= 1; --l) {
    const std::size_t k = fanout[layers - l];
    auto prev = sets[l];
    // sampled[r][i]: in-edge entry positions for the i-th row of dst type.
    std::vector<std::vector<std::vector<std::size_t>>> sampled(nr);
    for (std::size_t r = 0; r < nr; ++r) {
      const auto& rows = sets[l][g.dst_type(r)];
      sampled[r].resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        sampled[r][i] = detail::sample_entries(g.in_adj[r], rows[i], k, rng);
        for (std::size_t e : sampled[r][i]) prev[g.src_type(r)].push_back(g.in_adj[r].targets[e]);
      }
    }
    if (l == 1)
      for (std::size_t v : outputs)
        for (const Branch* b : {&partition.homo, &partition.hetero})
          for (std::size_t e = b->offsets[v]; e < b->offsets[v + 1]; ++e) prev[tgt].push_back(b->neighbors[e]);
    for (auto& s : prev) detail::sort_unique(s);

    auto& block = batch.plan.layers[l - 1];
    block.rows.resize(nt);
    block.self.resize(nt);
    block.aggregate.resize(nr);
    for (std::size_t t = 0; t < nt; ++t) {
      block.rows[t] = sets[l][t].size();
      std::vector<std::size_t> self;
      self.reserve(sets[l][t].size());
      for (std::size_t v : sets[l][t]) self.push_back(detail::position(prev[t], v));
      block.self[t] = std::move(self);
    }
    for (std::size_t r = 0; r < nr; ++r) {
      const auto& rows = sets[l][g.dst_type(r)];
      if (rows.empty()) continue;
      const auto& cols = prev[g.src_type(r)];
      auto m = std::make_shared<nn::SparseRows<T>>();
      m->cols = cols.size();
      for (const auto& entries : sampled[r]) {
        for (std::size_t e : entries) m->push(detail::position(cols, g.in_adj[r].targets[e]), T(1) / T(entries.size()));
        m->end_row();
      }
      block.aggregate[r] = m;
    }
    sets[l - 1] = std::move(prev);
  }
  batch.plan.input_nodes = sets[0];
  batch.plan.output_nodes = outputs;
  batch.branches = model::branch_matrices<T>(partition, outputs, sets[0][tgt]);
  return batch;
}

/// Shuffled batches covering every target node; each batch is sorted.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t num_targets, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) fail(ErrorCode::InvalidConfig, "batch size must be positive");
  std::vector<std::size_t> order(num_targets);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    std::vector<std::size_t> b(order.begin() + i, order.begin() + std::min(order.size(), i + batch_size));
    std::sort(b.begin(), b.end());
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace heterseed::train
