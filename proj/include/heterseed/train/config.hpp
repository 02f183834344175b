#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/model/params.hpp"

namespace heterseed::train {

using model::DecoupleVariant;

struct TrainConfig {
  double lr = 1e-3;
  std::size_t hidden_dim = 128;
  double dropout = 0.7;
  std::size_t epochs = 50;
  std::size_t layers = 2;
  double alpha = 0.2;
  double beta = 0.7;
  std::size_t batch_size = 0;  // 0: full batch
  std::vector<std::size_t> fanout{15, 15};  // fanout[0] is the hop nearest the seed nodes
  std::uint64_t seed = 0;
  DecoupleVariant dec_variant = DecoupleVariant::cosine;
  std::size_t refresh_period = 1;

  // Ablations.
  bool structural = true;
  bool homo_branch = true;
  bool hetero_branch = true;
  bool label_masking = true;
  bool decouple = true;

  double effective_alpha() const { return decouple && structural ? alpha : 0.0; }

  model::ModelConfig model_config() const {
    model::ModelConfig m;
    m.hidden_dim = hidden_dim;
    m.layers = layers;
    m.dropout = dropout;
    m.beta = beta;
    m.structural = structural;
    m.homo_branch = homo_branch;
    m.hetero_branch = hetero_branch;
    m.label_masking = label_masking;
    return m;
  }
};

inline void validate(const TrainConfig& c) {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
  if (c.layers < 1) bad("layers must be at least 1");
  if (c.hidden_dim < 1) bad("hidden dim must be at least 1");
  if (!(c.alpha >= 0.0)) bad("alpha must be non-negative");
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) bad("beta must lie in [0, 1]");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) bad("dropout must lie in [0, 1)");
  if (!(c.lr > 0.0)) bad("learning rate must be positive");
  if (c.refresh_period < 1) bad("refresh period must be at least 1");
  for (std::size_t f : c.fanout)
    if (f < 1) bad("fanout entries must be at least 1");
  if (c.batch_size > 0 && c.fanout.size() != c.layers)
    bad("fanout has " + std::to_string(c.fanout.size()) + " entries for " + std::to_string(c.layers) + " layers");
  if (c.structural && !c.homo_branch && !c.hetero_branch) bad("cannot disable both structural branches");
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"dblp", "imdb", "acm", "mag", "rcdd"};
  return names;
}

/// Published per-dataset hyperparameters. Two layers everywhere.
inline TrainConfig preset(const std::string& name) {
  TrainConfig c;
  c.layers = 2;
  if (name == "dblp") {
    c.lr = 1e-3, c.hidden_dim = 128, c.dropout = 0.7, c.epochs = 50, c.alpha = 0.2, c.beta = 0.7;
  } else if (name == "imdb") {
    c.lr = 5e-3, c.hidden_dim = 128, c.dropout = 0.9, c.epochs = 50, c.alpha = 0.2, c.beta = 0.6;
  } else if (name == "acm") {
    c.lr = 5e-3, c.hidden_dim = 128, c.dropout = 0.9, c.epochs = 100, c.alpha = 0.3, c.beta = 0.7;
  } else if (name == "mag") {
    c.lr = 5e-3, c.hidden_dim = 256, c.dropout = 0.3, c.epochs = 50, c.alpha = 0.4, c.beta = 1.0;
    c.batch_size = 1024, c.fanout = {15, 15};
  } else if (name == "rcdd") {
    c.lr = 5e-3, c.hidden_dim = 256, c.dropout = 0.7, c.epochs = 100, c.alpha = 0.2, c.beta = 0.7;
    c.batch_size = 1024, c.fanout = {15, 15};
  } else {
    fail(ErrorCode::InvalidConfig, "unknown preset '" + name + "'");
  }
  return c;
}

}  // namespace heterseed::train
