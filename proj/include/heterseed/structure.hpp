#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/metapath.hpp"

namespace heterseed {

/// Per target node v: the union neighbour list over all metapaths, the raw
/// weight sum_p C_p(u, v), and its softmax over the neighbour list.
struct StructuralWeights {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> neighbors;
  std::vector<double> raw;
  std::vector<double> normalized;

  std::size_t degree(std::size_t v) const { return offsets[v + 1] - offsets[v]; }
};

inline StructuralWeights structural_weights(std::span<const InducedGraph> graphs) {
  StructuralWeights w;
  if (graphs.empty()) return w;
  const std::size_t n = graphs.front().num_nodes();
  for (const auto& ig : graphs)
    if (ig.num_nodes() != n || ig.counts.cols != n)
      fail(ErrorCode::ShapeMismatch, "induced graphs do not share the target node set");

  // Row v of the transpose lists u with C_p(u, v) > 0.
  std::vector<CountMatrix> cols;
  cols.reserve(graphs.size());
  for (const auto& ig : graphs) cols.push_back(ig.counts.transpose());

  w.num_nodes = n;
  w.offsets.assign(n + 1, 0);
  std::vector<double> acc(n, 0.0);
  std::vector<char> used(n, 0);
  std::vector<std::size_t> touched;
  for (std::size_t v = 0; v < n; ++v) {
    touched.clear();
    for (const auto& c : cols) {
      for (std::size_t k = c.offsets[v]; k < c.offsets[v + 1]; ++k) {
        const std::size_t u = c.indices[k];
        if (u == v) continue;
        if (!used[u]) {
          used[u] = 1;
          touched.push_back(u);
        }
        acc[u] += static_cast<double>(c.counts[k]);
      }
    }
    std::sort(touched.begin(), touched.end());
    const std::size_t start = w.neighbors.size();
    double peak = -INFINITY;
    for (std::size_t u : touched) {
      w.neighbors.push_back(u);
      w.raw.push_back(acc[u]);
      peak = std::max(peak, acc[u]);
      acc[u] = 0.0;
      used[u] = 0;
    }
    double z = 0.0;
    for (std::size_t k = start; k < w.raw.size(); ++k) {
      const double e = std::exp(w.raw[k] - peak);
      w.normalized.push_back(e);
      z += e;
    }
    for (std::size_t k = start; k < w.normalized.size(); ++k) w.normalized[k] /= z;
    w.offsets[v + 1] = w.neighbors.size();
  }
  return w;
}

/// Weighted neighbour lists of one branch in CSR form.
struct Branch {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> neighbors;
  std::vector<double> weights;

  std::size_t degree(std::size_t v) const { return offsets[v + 1] - offsets[v]; }
};

/// Homophilic / heterophilic split of every node's neighbour list. Weights are
/// the union softmax values carried over unchanged.
struct Partition {
  Branch homo;
  Branch hetero;
};

template <class SameLabel>
  requires std::is_invocable_r_v<bool, SameLabel, std::size_t, std::size_t>
Partition partition_neighbors(const StructuralWeights& w, SameLabel&& same) {
  Partition p;
  p.homo.offsets.assign(w.num_nodes + 1, 0);
  p.hetero.offsets.assign(w.num_nodes + 1, 0);
  for (std::size_t v = 0; v < w.num_nodes; ++v) {
    for (std::size_t k = w.offsets[v]; k < w.offsets[v + 1]; ++k) {
      const std::size_t u = w.neighbors[k];
      Branch& b = same(u, v) ? p.homo : p.hetero;
      b.neighbors.push_back(u);
      b.weights.push_back(w.normalized[k]);
    }
    p.homo.offsets[v + 1] = p.homo.neighbors.size();
    p.hetero.offsets[v + 1] = p.hetero.neighbors.size();
  }
  return p;
}

inline Partition partition_neighbors(const StructuralWeights& w, std::span<const std::int32_t> pseudo) {
  if (pseudo.size() != w.num_nodes) fail(ErrorCode::ShapeMismatch, "pseudo-label vector size differs from node count");
  return partition_neighbors(w, [&](std::size_t u, std::size_t v) { return pseudo[u] == pseudo[v]; });
}

}  // namespace heterseed
