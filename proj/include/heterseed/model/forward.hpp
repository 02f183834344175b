#pragma once

#include <cstdint>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/model/fusion.hpp"
#include "heterseed/model/masking.hpp"
#include "heterseed/model/params.hpp"
#include "heterseed/model/semantic.hpp"
#include "heterseed/model/structural.hpp"
#include "heterseed/nn/ops.hpp"

namespace heterseed::model {

/// Everything a forward pass reads besides the parameters.
template <class T>
struct ForwardInputs {
  const HetGraph* graph = nullptr;
  const std::vector<Var<T>>* features = nullptr;  // per type, null when featureless
  const SemanticPlan<T>* plan = nullptr;
  const BranchMatrices<T>* branches = nullptr;    // rows: plan->output_nodes, cols: plan->input_nodes[target]
  const std::vector<std::uint8_t>* is_train = nullptr;
  MaskMode mode = MaskMode::infer;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  Rng* rng = nullptr;  // dropout stream
  bool training = false;
};

template <class T>
struct ForwardOutput {
  Var<T> logits;
  Var<T> h_sem;
  Var<T> h_struct;  // null without the structural channel
  Var<T> h;
  Var<T> gamma;     // null without the structural channel
  Var<T> x_tilde;   // target input rows after label injection
  MaskingStats stats;
};

/// Constant per-type feature tensors.
template <class T>
std::vector<Var<T>> feature_tensors(const HetGraph& g) {
  std::vector<Var<T>> out(g.num_types());
  for (std::size_t t = 0; t < g.num_types() && t < g.features.size(); ++t) {
    if (!g.features[t]) continue;
    const auto& f = *g.features[t];
    auto v = std::make_shared<nn::Tensor<T>>();
    v->shape = {f.rows, f.cols};
    v->values.assign(f.values.begin(), f.values.end());
    out[t] = v;
  }
  return out;
}

template <class T>
ForwardOutput<T> forward(nn::Tape<T>& tape, const HeterSeedParams<T>& params, const ModelConfig& cfg,
                         const ForwardInputs<T>& in) {
  if (!in.graph || !in.features || !in.plan || !in.is_train || !in.rng)
    fail(ErrorCode::InvalidConfig, "forward inputs incomplete");
  const HetGraph& g = *in.graph;
  const auto& plan = *in.plan;
  const std::size_t tgt = g.target();
  ForwardOutput<T> out;

  auto h0 = project_inputs(tape, g, *in.features, params.input, plan.input_nodes);
  for (auto& h : h0)
    if (h) h = nn::dropout(tape, h, cfg.dropout, *in.rng, in.training);

  Var<T> x = h0[tgt];
  if (cfg.injects_labels())
    x = mask_and_inject(tape, x, plan.input_nodes[tgt], g.labels, *in.is_train, params.label, cfg.beta, in.mode,
                        in.seed, in.epoch, &out.stats);
  h0[tgt] = x;
  out.x_tilde = x;

  auto hs = semantic_forward(tape, g, h0, params.semantic, plan, cfg.dropout, *in.rng, in.training);
  out.h_sem = hs[tgt];

  if (cfg.structural) {
    if (!in.branches) fail(ErrorCode::InvalidConfig, "structural channel needs branch matrices");
    auto [homo, hetero] = branch_aggregate(tape, x, *in.branches);
    auto sr = structural_fuse(tape, homo, hetero, params.structural, cfg, *in.rng, in.training);
    out.h_struct = sr.h;
    auto fused = fuse(tape, out.h_sem, out.h_struct, params.fusion);
    out.h = fused.h;
    out.gamma = fused.gamma;
  } else {
    out.h = out.h_sem;
  }
  out.logits = nn::add(tape, nn::matmul(tape, out.h, params.fusion.cls_w), params.fusion.cls_b);
  return out;
}

}  // namespace heterseed::model
