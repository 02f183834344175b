#pragma once

#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/model/params.hpp"
#include "heterseed/model/structural.hpp"
#include "heterseed/nn/ops.hpp"

namespace heterseed::model {

template <class T>
struct Fused {
  Var<T> h;
  Var<T> gamma;  // n x 1
};

/// gamma = sigma([h_s || h_r] w + b); h = (1 - gamma) h_s + gamma h_r.
template <class T>
Fused<T> fuse(nn::Tape<T>& tape, const Var<T>& hs, const Var<T>& hr, const FusionParams<T>& p) {
  if (hs->shape != hr->shape)
    fail(ErrorCode::ShapeMismatch, "fuse: " + nn::shape_str(hs->shape) + " vs " + nn::shape_str(hr->shape));
  auto z = nn::add(tape, nn::matmul(tape, nn::concat(tape, {hs, hr}), p.gate_w), p.gate_b);
  Fused<T> out;
  out.gamma = nn::sigmoid(tape, z);
  out.h = nn::add(tape, hs, nn::mul(tape, nn::sub(tape, hr, hs), out.gamma));
  return out;
}

template <class T>
Var<T> decouple_loss(nn::Tape<T>& tape, const Var<T>& hs, const Var<T>& hr, DecoupleVariant variant) {
  return variant == DecoupleVariant::cosine ? nn::abs_cosine_mean(tape, hs, hr) : nn::cross_covariance_loss(tape, hs, hr);
}

/// Mean loss over `rows` of the logits; `nodes[row]` is the global target id whose label is used.
template <class T>
Var<T> classification_loss(nn::Tape<T>& tape, const Var<T>& logits, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& nodes, const Labels& labels) {
  if (rows.empty()) fail(ErrorCode::EmptyMask, "classification loss over no rows");
  if (labels.mode == LabelMode::single) {
    std::vector<std::int32_t> targets;
    targets.reserve(rows.size());
    for (std::size_t r : rows) targets.push_back(labels.single[nodes[r]]);
    return nn::softmax_cross_entropy(tape, logits, rows, std::move(targets));
  }
  std::vector<std::vector<std::uint8_t>> targets;
  targets.reserve(rows.size());
  for (std::size_t r : rows) targets.push_back(labels.multi[nodes[r]]);
  return nn::bce_with_logits(tape, logits, rows, std::move(targets));
}

template <class T>
Var<T> total_loss(nn::Tape<T>& tape, const Var<T>& cls, const Var<T>& dec, double alpha) {
  if (alpha < 0.0) fail(ErrorCode::InvalidConfig, "alpha must be non-negative");
  if (!dec || alpha == 0.0) return cls;
  return nn::add(tape, cls, nn::scale(tape, dec, static_cast<T>(alpha)));
}

}  // namespace heterseed::model
