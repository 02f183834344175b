#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/model/params.hpp"
#include "heterseed/nn/ops.hpp"
#include "heterseed/nn/sparse.hpp"

namespace heterseed::model {

using nn::SparsePtr;
using nn::SparseRows;
using nn::Tape;

/// One message-passing layer over explicit node sets. For each node type the
/// layer produces `rows[t]` rows; `self[t]` maps them into the previous
/// layer's rows of the same type (nullopt: identity). `aggregate[r]` is the
/// mean-aggregation matrix of relation r (rows: this layer's dst-type rows,
/// cols: previous layer's src-type rows), null when unused.
template <class T>
struct SemanticBlock {
  std::vector<std::size_t> rows;
  std::vector<std::optional<std::vector<std::size_t>>> self;
  std::vector<SparsePtr<T>> aggregate;
};

/// Node sets per layer. input_nodes[t] are the global ids of layer-0 rows;
/// the last block's target-type rows are output_nodes.
template <class T>
struct SemanticPlan {
  std::vector<std::vector<std::size_t>> input_nodes;
  std::vector<SemanticBlock<T>> layers;
  std::vector<std::size_t> output_nodes;
  bool full = false;  // input rows are all nodes in index order
};

/// Row-normalised incoming adjacency of relation r over all nodes; multi-edges count separately.
template <class T>
SparsePtr<T> mean_adjacency(const HetGraph& g, std::size_t r) {
  auto m = std::make_shared<SparseRows<T>>();
  m->cols = g.node_counts[g.src_type(r)];
  const Csr& in = g.in_adj[r];
  for (std::size_t v = 0; v < g.node_counts[g.dst_type(r)]; ++v) {
    const std::size_t deg = in.degree(v);
    for (std::size_t k = in.begin(v); k < in.end(v); ++k) m->push(in.targets[k], T(1) / T(deg));
    m->end_row();
  }
  return m;
}

template <class T>
SemanticPlan<T> full_plan(const HetGraph& g, std::size_t layers) {
  SemanticPlan<T> plan;
  plan.full = true;
  for (std::size_t t = 0; t < g.num_types(); ++t) {
    std::vector<std::size_t> ids(g.node_counts[t]);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    plan.input_nodes.push_back(std::move(ids));
  }
  std::vector<SparsePtr<T>> agg;
  for (std::size_t r = 0; r < g.num_relations(); ++r) agg.push_back(mean_adjacency<T>(g, r));
  for (std::size_t l = 0; l < layers; ++l) {
    SemanticBlock<T> block;
    block.rows = g.node_counts;
    // Only target rows are read from the last layer.
    if (l + 1 == layers)
      for (std::size_t t = 0; t < g.num_types(); ++t)
        if (t != g.target()) block.rows[t] = 0;
    block.self.assign(g.num_types(), std::nullopt);
    block.aggregate = agg;
    plan.layers.push_back(std::move(block));
  }
  plan.output_nodes = plan.input_nodes[g.target()];
  return plan;
}

/// Per-type input rows of uniform width: linear projection of features, or a
/// broadcast of the learnable type embedding for featureless types.
template <class T>
std::vector<Var<T>> project_inputs(Tape<T>& tape, const HetGraph& g, const std::vector<Var<T>>& features,
                                   const InputProjection<T>& proj,
                                   const std::vector<std::vector<std::size_t>>& nodes) {
  std::vector<Var<T>> out(g.num_types());
  for (std::size_t t = 0; t < g.num_types(); ++t) {
    const auto& ids = nodes[t];
    if (ids.empty()) continue;
    if (t < features.size() && features[t]) {
      if (!proj.weight[t]) fail(ErrorCode::MissingProjection, "no projection for featured type '" + g.node_types[t] + "'");
      const bool identity = ids.size() == features[t]->rows() && ids.back() + 1 == ids.size();
      const Var<T> x = identity ? features[t] : nn::row_gather(tape, features[t], ids);
      out[t] = nn::add(tape, nn::matmul(tape, x, proj.weight[t]), proj.bias[t]);
    } else {
      if (!proj.embedding[t]) fail(ErrorCode::MissingProjection, "no embedding for featureless type '" + g.node_types[t] + "'");
      out[t] = nn::row_gather(tape, proj.embedding[t], std::vector<std::size_t>(ids.size(), 0));
    }
  }
  return out;
}

/// Relation-wise mean aggregation, h' = ReLU(h W_self + sum_r mean_{u in N_r(v)} h_u W_r),
/// repeated over the plan's layers. Dropout is applied between layers.
template <class T>
std::vector<Var<T>> semantic_forward(Tape<T>& tape, const HetGraph& g, std::vector<Var<T>> h,
                                     const std::vector<SemanticLayerParams<T>>& layers, const SemanticPlan<T>& plan,
                                     double dropout, Rng& rng, bool training) {
  if (layers.size() != plan.layers.size() || layers.empty())
    fail(ErrorCode::ShapeMismatch, "semantic plan has " + std::to_string(plan.layers.size()) + " layers, parameters " +
                                       std::to_string(layers.size()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& block = plan.layers[l];
    const auto& w = layers[l];
    std::vector<Var<T>> next(g.num_types());
    for (std::size_t t = 0; t < g.num_types(); ++t) {
      if (block.rows[t] == 0) continue;
      if (!h[t]) fail(ErrorCode::ShapeMismatch, "layer input missing for type '" + g.node_types[t] + "'");
      Var<T> self = block.self[t] ? nn::row_gather(tape, h[t], *block.self[t]) : h[t];
      Var<T> pre = nn::matmul(tape, self, w.self);
      // Relations summed in schema order.
      for (std::size_t r = 0; r < g.num_relations(); ++r) {
        if (g.dst_type(r) != t || !block.aggregate[r]) continue;
        const auto& src = h[g.src_type(r)];
        if (!src) continue;
        if (!w.relation[r]) fail(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " has no weight for relation '" + g.relations[r].name + "'");
        pre = nn::add(tape, pre, nn::matmul(tape, nn::spmm(tape, block.aggregate[r], src), w.relation[r]));
      }
      Var<T> act = nn::relu(tape, pre);
      if (l + 1 < layers.size()) act = nn::dropout(tape, act, dropout, rng, training);
      next[t] = act;
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace heterseed::model
