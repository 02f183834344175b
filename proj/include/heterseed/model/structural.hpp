#pragma once

#include <algorithm>
#include <memory>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/model/params.hpp"
#include "heterseed/nn/ops.hpp"
#include "heterseed/structure.hpp"

namespace heterseed::model {

/// Branch weights for the given output rows as a sparse matrix whose columns
/// index `input_nodes` (sorted global target ids).
template <class T>
nn::SparsePtr<T> branch_matrix(const Branch& branch, const std::vector<std::size_t>& output_nodes,
                               const std::vector<std::size_t>& input_nodes) {
  auto m = std::make_shared<nn::SparseRows<T>>();
  m->cols = input_nodes.size();
  const bool identity = !input_nodes.empty() && input_nodes.back() + 1 == input_nodes.size();
  for (std::size_t v : output_nodes) {
    if (v + 1 >= branch.offsets.size()) fail(ErrorCode::IndexOutOfRange, "node " + std::to_string(v) + " not in partition");
    for (std::size_t k = branch.offsets[v]; k < branch.offsets[v + 1]; ++k) {
      const std::size_t u = branch.neighbors[k];
      std::size_t col = u;
      if (!identity) {
        auto it = std::lower_bound(input_nodes.begin(), input_nodes.end(), u);
        if (it == input_nodes.end() || *it != u)
          fail(ErrorCode::IndexOutOfRange, "neighbour " + std::to_string(u) + " missing from input rows");
        col = static_cast<std::size_t>(it - input_nodes.begin());
      } else if (u >= input_nodes.size()) {
        fail(ErrorCode::IndexOutOfRange, "neighbour " + std::to_string(u) + " outside input rows");
      }
      m->push(col, static_cast<T>(branch.weights[k]));
    }
    m->end_row();
  }
  return m;
}

template <class T>
struct BranchMatrices {
  nn::SparsePtr<T> homo;
  nn::SparsePtr<T> hetero;
};

template <class T>
BranchMatrices<T> branch_matrices(const Partition& p, const std::vector<std::size_t>& output_nodes,
                                  const std::vector<std::size_t>& input_nodes) {
  return {branch_matrix<T>(p.homo, output_nodes, input_nodes), branch_matrix<T>(p.hetero, output_nodes, input_nodes)};
}

/// h_homo(v) = sum over homophilic u of w(u,v) x_u; likewise for the heterophilic branch.
template <class T>
std::pair<Var<T>, Var<T>> branch_aggregate(Tape<T>& tape, const Var<T>& x, const BranchMatrices<T>& m) {
  return {nn::spmm(tape, m.homo, x), nn::spmm(tape, m.hetero, x)};
}

/// Two-layer MLP with ReLU; dropout after the hidden activation.
template <class T>
Var<T> mlp_forward(Tape<T>& tape, const Mlp<T>& mlp, const Var<T>& x, double dropout, Rng& rng, bool training) {
  Var<T> h = nn::relu(tape, nn::add(tape, nn::matmul(tape, x, mlp.w1), mlp.b1));
  h = nn::dropout(tape, h, dropout, rng, training);
  return nn::add(tape, nn::matmul(tape, h, mlp.w2), mlp.b2);
}

/// sigma(z) * a + (1 - sigma(z)) * b, evaluated as b + sigma(z) * (a - b).
template <class T>
Var<T> gated_combine(Tape<T>& tape, const Var<T>& a, const Var<T>& b, const Var<T>& z) {
  return nn::add(tape, b, nn::mul(tape, nn::sigmoid(tape, z), nn::sub(tape, a, b)));
}

template <class T>
struct StructuralOutput {
  Var<T> h;         // fused structural embedding
  Var<T> gate_pre;  // gate pre-activation z (null when a branch is disabled)
  Var<T> t_homo;
  Var<T> t_hetero;
};

/// Dimension-wise gated fusion of the transformed branches. The gate is a
/// shared linear map over [T_homo(h_homo) || T_hetero(h_hetero)].
template <class T>
StructuralOutput<T> structural_fuse(Tape<T>& tape, const Var<T>& h_homo, const Var<T>& h_hetero,
                                    const StructuralChannelParams<T>& p, const ModelConfig& cfg, Rng& rng,
                                    bool training) {
  if (h_homo->shape != h_hetero->shape)
    fail(ErrorCode::ShapeMismatch, "branch shapes " + nn::shape_str(h_homo->shape) + " vs " + nn::shape_str(h_hetero->shape));
  StructuralOutput<T> out;
  if (cfg.homo_branch) out.t_homo = mlp_forward(tape, p.homo, h_homo, cfg.dropout, rng, training);
  if (cfg.hetero_branch) out.t_hetero = mlp_forward(tape, p.hetero, h_hetero, cfg.dropout, rng, training);
  if (out.t_homo && out.t_hetero) {
    out.gate_pre = nn::add(tape, nn::matmul(tape, nn::concat(tape, {out.t_homo, out.t_hetero}), p.gate_w), p.gate_b);
    out.h = gated_combine(tape, out.t_homo, out.t_hetero, out.gate_pre);
  } else if (out.t_homo) {
    out.h = out.t_homo;
  } else if (out.t_hetero) {
    out.h = out.t_hetero;
  } else {
    fail(ErrorCode::InvalidConfig, "both structural branches disabled");
  }
  return out;
}

}  // namespace heterseed::model
