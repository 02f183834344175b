#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/nn/checkpoint.hpp"
#include "heterseed/nn/tape.hpp"
#include "heterseed/nn/init.hpp"
#include "heterseed/rng.hpp"

namespace heterseed::model {

using nn::Tape;
using nn::Var;

enum class DecoupleVariant { cosine, crosscov };

/// Architecture switches. The ablation flags each remove one component.
struct ModelConfig {
  std::size_t hidden_dim = 128;
  std::size_t layers = 2;
  double dropout = 0.7;
  double beta = 0.7;
  bool structural = true;     // false: semantic backbone only
  bool homo_branch = true;
  bool hetero_branch = true;
  bool label_masking = true;

  // Label injection feeds the structural channel; the bare backbone runs on raw inputs.
  bool injects_labels() const { return label_masking && structural; }
};

template <class T>
struct Mlp {
  Var<T> w1, b1, w2, b2;
};

template <class T>
struct InputProjection {
  // Per node type: weight/bias for featured types, a single embedding row otherwise.
  std::vector<Var<T>> weight, bias, embedding;
};

template <class T>
struct LabelEmbeddingParams {
  Var<T> table;  // (C + 1) x d, last row is the [MASK] token
  Var<T> proj;   // d x d
  std::size_t num_classes = 0;

  std::size_t mask_row() const { return num_classes; }
};

template <class T>
struct SemanticLayerParams {
  Var<T> self;
  std::vector<Var<T>> relation;  // one per schema relation, null where unused
};

template <class T>
struct StructuralChannelParams {
  Mlp<T> homo, hetero;
  Var<T> gate_w, gate_b;  // 2d -> d
};

template <class T>
struct FusionParams {
  Var<T> gate_w, gate_b;  // 2d -> 1
  Var<T> cls_w, cls_b;    // d -> C
};

template <class T>
struct HeterSeedParams {
  InputProjection<T> input;
  LabelEmbeddingParams<T> label;
  std::vector<SemanticLayerParams<T>> semantic;
  StructuralChannelParams<T> structural;
  FusionParams<T> fusion;
  nn::ParamStore<T> store;

  std::size_t hidden_dim() const { return label.proj->shape[0]; }

  /// Xavier-uniform weights, zero biases; deterministic given the seed.
  static HeterSeedParams init(const HetGraph& g, const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.hidden_dim == 0 || cfg.layers == 0) fail(ErrorCode::InvalidConfig, "hidden_dim and layers must be positive");
    const std::size_t d = cfg.hidden_dim;
    const std::size_t c = g.labels.num_classes;
    HeterSeedParams p;
    std::uint64_t counter = 0;
    auto weight = [&](const std::string& name, nn::Shape s) {
      auto v = nn::xavier_uniform<T>(s, derive_seed(seed, {0x1417, counter++}));
      p.store.add(name, v);
      return v;
    };
    auto bias = [&](const std::string& name, std::size_t n) {
      auto v = nn::zeros_param<T>({1, n});
      p.store.add(name, v);
      return v;
    };

    const std::size_t nt = g.num_types();
    p.input.weight.resize(nt);
    p.input.bias.resize(nt);
    p.input.embedding.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& name = g.node_types[t];
      if (t < g.features.size() && g.features[t]) {
        p.input.weight[t] = weight("input." + name + ".weight", {g.features[t]->cols, d});
        p.input.bias[t] = bias("input." + name + ".bias", d);
      } else {
        p.input.embedding[t] = weight("input." + name + ".embedding", {1, d});
      }
    }

    p.label.num_classes = c;
    p.label.table = weight("label.table", {c + 1, d});
    p.label.proj = weight("label.proj", {d, d});

    for (std::size_t l = 0; l < cfg.layers; ++l) {
      SemanticLayerParams<T> layer;
      const auto prefix = "semantic." + std::to_string(l) + ".";
      layer.self = weight(prefix + "self", {d, d});
      // The last layer only updates target nodes, so relations into other types get no weight there.
      const bool last = l + 1 == cfg.layers;
      for (std::size_t r = 0; r < g.num_relations(); ++r)
        layer.relation.push_back(last && g.dst_type(r) != g.target() ? nullptr
                                                                     : weight(prefix + g.relations[r].name, {d, d}));
      p.semantic.push_back(std::move(layer));
    }

    auto mlp = [&](const std::string& prefix) {
      Mlp<T> m;
      m.w1 = weight(prefix + ".w1", {d, d});
      m.b1 = bias(prefix + ".b1", d);
      m.w2 = weight(prefix + ".w2", {d, d});
      m.b2 = bias(prefix + ".b2", d);
      return m;
    };
    p.structural.homo = mlp("structural.homo");
    p.structural.hetero = mlp("structural.hetero");
    p.structural.gate_w = weight("structural.gate.weight", {2 * d, d});
    p.structural.gate_b = bias("structural.gate.bias", d);

    p.fusion.gate_w = weight("fusion.gate.weight", {2 * d, 1});
    p.fusion.gate_b = bias("fusion.gate.bias", 1);
    p.fusion.cls_w = weight("classifier.weight", {d, c});
    p.fusion.cls_b = bias("classifier.bias", c);
    return p;
  }

  /// Copies parameter values (not gradients) from a structurally identical set.
  void copy_values_from(const HeterSeedParams& other) {
    if (other.store.size() != store.size()) fail(ErrorCode::ShapeMismatch, "parameter sets differ");
    for (std::size_t i = 0; i < store.size(); ++i) store.params()[i]->values = other.store.params()[i]->values;
  }

  std::vector<std::vector<T>> snapshot() const {
    std::vector<std::vector<T>> out;
    for (const auto& v : store.params()) out.push_back(v->values);
    return out;
  }

  void restore(const std::vector<std::vector<T>>& snap) {
    if (snap.size() != store.size()) fail(ErrorCode::ShapeMismatch, "snapshot size differs");
    for (std::size_t i = 0; i < snap.size(); ++i) store.params()[i]->values = snap[i];
  }
};

}  // namespace heterseed::model
