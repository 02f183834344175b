#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/metapath.hpp"
#include "heterseed/model/forward.hpp"
#include "heterseed/nn/adam.hpp"
#include "heterseed/nn/checkpoint.hpp"
#include "heterseed/rng.hpp"
#include "heterseed/structure.hpp"
#include "heterseed/train/config.hpp"
#include "heterseed/train/metrics.hpp"
#include "heterseed/train/sampler.hpp"

namespace heterseed::train {

enum class Provenance : std::uint8_t { ground_truth, predicted };

/// Ground truth on training nodes, model predictions elsewhere. Only used to
/// split structural neighbours into homophilic and heterophilic sets.
struct PseudoLabels {
  LabelMode mode = LabelMode::single;
  std::vector<std::int32_t> single;
  std::vector<std::vector<std::uint8_t>> multi;
  std::vector<Provenance> provenance;

  std::size_t size() const { return provenance.size(); }

  bool same(std::size_t u, std::size_t v) const {
    if (mode == LabelMode::single) return single[u] == single[v];
    const auto& a = multi[u];
    const auto& b = multi[v];
    for (std::size_t c = 0; c < a.size() && c < b.size(); ++c)
      if (a[c] && b[c]) return true;
    return false;
  }

  bool operator==(const PseudoLabels&) const = default;
};

inline std::vector<std::uint8_t> train_mask(const HetGraph& g) {
  std::vector<std::uint8_t> m(g.num_targets(), 0);
  for (std::size_t v : g.splits.train) m[v] = 1;
  return m;
}

/// Before any prediction exists every unlabelled node gets a label of its own,
/// so only training nodes can be homophilic neighbours.
inline PseudoLabels bootstrap_pseudo_labels(const HetGraph& g, const std::vector<std::uint8_t>& is_train) {
  const std::size_t n = g.num_targets();
  PseudoLabels p;
  p.mode = g.labels.mode;
  p.provenance.assign(n, Provenance::predicted);
  if (p.mode == LabelMode::single) {
    p.single.resize(n);
    for (std::size_t v = 0; v < n; ++v) p.single[v] = -1 - static_cast<std::int32_t>(v);
  } else {
    p.multi.assign(n, {});
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!is_train[v] || !g.labels.has(v)) continue;
    p.provenance[v] = Provenance::ground_truth;
    if (p.mode == LabelMode::single)
      p.single[v] = g.labels.single[v];
    else
      p.multi[v] = g.labels.multi[v];
  }
  return p;
}

/// Pseudo-labels from logits over all target nodes (row v = node v).
template <class T>
PseudoLabels pseudo_labels_from_logits(const HetGraph& g, const std::vector<std::uint8_t>& is_train,
                                       const nn::Tensor<T>& logits) {
  PseudoLabels p = bootstrap_pseudo_labels(g, is_train);
  const std::size_t c = logits.cols();
  for (std::size_t v = 0; v < p.size(); ++v) {
    if (p.provenance[v] == Provenance::ground_truth) continue;
    const T* row = logits.values.data() + v * c;
    const auto best = static_cast<std::size_t>(std::max_element(row, row + c) - row);
    if (p.mode == LabelMode::single) {
      p.single[v] = static_cast<std::int32_t>(best);
    } else {
      std::vector<std::uint8_t> set(c, 0);
      bool any = false;
      for (std::size_t k = 0; k < c; ++k) any |= (set[k] = row[k] > T(0)) != 0;
      if (!any) set[best] = 1;
      p.multi[v] = std::move(set);
    }
  }
  return p;
}

struct EpochLog {
  std::size_t epoch = 0;
  double l_cls = 0.0;
  double l_dec = 0.0;
  double l_total = 0.0;
  Metrics val;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  Metrics best_val;
  std::optional<Metrics> test;
  double mean_abs_cos = 0.0;  // over all target nodes, returned model
  std::size_t structural_builds = 0;
};

inline std::string format_metric(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline void write_log_header(std::ostream& os) { os << "epoch\tL_cls\tL_dec\tL\tval_macro\tval_micro\n"; }

inline void write_log_row(std::ostream& os, const EpochLog& e) {
  os << e.epoch << '\t' << format_metric(e.l_cls) << '\t' << format_metric(e.l_dec) << '\t' << format_metric(e.l_total)
     << '\t' << format_metric(e.val.macro_f1) << '\t' << format_metric(e.val.micro_f1) << '\n';
}

inline void write_test_line(std::ostream& os, const Metrics& m) {
  os << "test\t" << format_metric(m.macro_f1) << '\t' << format_metric(m.micro_f1) << '\t'
     << format_metric(m.average_precision) << '\n';
}

inline constexpr std::uint64_t kInitStream = 0x696E6974;
inline constexpr std::uint64_t kDropoutStream = 0x64726F70;
inline constexpr std::uint64_t kShuffleStream = 0x73687566;
inline constexpr std::uint64_t kSampleStream = 0x73616D70;

/// Runs the training procedure on one graph. Structural counts and weights are
/// computed once and reused; only the partition follows the pseudo-labels.
template <class T>
class Trainer {
 public:
  Trainer(const HetGraph& g, std::vector<Metapath> metapaths, TrainConfig cfg)
      : g_(g), metapaths_(std::move(metapaths)), cfg_(std::move(cfg)) {
    validate(cfg_);
    if (g_.labels.num_classes == 0) fail(ErrorCode::InvalidConfig, "target labels have no classes");
    if (g_.splits.train.empty()) fail(ErrorCode::EmptySplit, "no training nodes");
    if (cfg_.structural && metapaths_.empty()) fail(ErrorCode::InvalidConfig, "structural channel needs at least one metapath");
    for (const auto& p : metapaths_) check_metapath(g_, p);
    model_ = cfg_.model_config();
    is_train_ = train_mask(g_);
    features_ = model::feature_tensors<T>(g_);
    full_plan_ = model::full_plan<T>(g_, cfg_.layers);
    params_ = model::HeterSeedParams<T>::init(g_, model_, derive_seed(cfg_.seed, {kInitStream}));
    adam_.lr = cfg_.lr;
    pseudo_ = bootstrap_pseudo_labels(g_, is_train_);
  }

  const TrainConfig& config() const { return cfg_; }
  const model::ModelConfig& model_config() const { return model_; }
  const HetGraph& graph() const { return g_; }
  model::HeterSeedParams<T>& params() { return params_; }
  const model::HeterSeedParams<T>& params() const { return params_; }
  const PseudoLabels& pseudo_labels() const { return pseudo_; }
  void set_pseudo_labels(PseudoLabels p) {
    if (p.size() != g_.num_targets()) fail(ErrorCode::ShapeMismatch, "pseudo-label count differs from target count");
    pseudo_ = std::move(p);
  }
  const std::vector<std::uint8_t>& is_train() const { return is_train_; }
  std::size_t structural_builds() const { return builds_; }

  const std::vector<InducedGraph>& induced_graphs() {
    structural();
    return graphs_;
  }

  /// Cached structural weights, built on first use.
  std::shared_ptr<const StructuralWeights> structural() {
    if (!weights_) {
      graphs_.clear();
      for (const auto& p : metapaths_) graphs_.push_back(build_induced_graph(g_, p));
      weights_ = std::make_shared<const StructuralWeights>(structural_weights(graphs_));
      ++builds_;
    }
    return weights_;
  }

  Partition partition(const PseudoLabels& p) {
    auto w = structural();
    return partition_neighbors(*w, [&](std::size_t u, std::size_t v) { return p.same(u, v); });
  }

  /// Deterministic full-graph forward pass: no dropout, training labels unmasked.
  model::ForwardOutput<T> infer(const PseudoLabels& p) {
    nn::Tape<T> tape(false);
    Rng rng(0);
    std::optional<model::BranchMatrices<T>> branches;
    if (model_.structural) branches = model::branch_matrices<T>(partition(p), full_plan_.output_nodes, full_plan_.input_nodes[g_.target()]);
    model::ForwardInputs<T> in;
    in.graph = &g_;
    in.features = &features_;
    in.plan = &full_plan_;
    in.branches = branches ? &*branches : nullptr;
    in.is_train = &is_train_;
    in.mode = model::MaskMode::infer;
    in.seed = cfg_.seed;
    in.rng = &rng;
    in.training = false;
    return model::forward(tape, params_, model_, in);
  }

  model::ForwardOutput<T> infer() { return infer(pseudo_); }

  /// Metrics of full-graph logits restricted to `nodes`.
  Metrics metrics(const nn::Tensor<T>& logits, const std::vector<std::size_t>& nodes) const {
    if (nodes.empty()) fail(ErrorCode::EmptySplit, "evaluation split is empty");
    const std::size_t c = logits.cols();
    std::vector<std::vector<double>> rows;
    rows.reserve(nodes.size());
    for (std::size_t v : nodes) {
      const T* r = logits.values.data() + v * c;
      if (g_.labels.mode == LabelMode::single)
        rows.push_back(softmax_row(r, c));
      else
        rows.emplace_back(r, r + c);
    }
    if (g_.labels.mode == LabelMode::single) {
      std::vector<std::int32_t> truth;
      for (std::size_t v : nodes) truth.push_back(g_.labels.single[v]);
      return single_label_metrics(rows, truth, g_.labels.num_classes);
    }
    std::vector<std::vector<std::uint8_t>> truth;
    for (std::size_t v : nodes) truth.push_back(g_.labels.multi[v]);
    return multi_label_metrics(rows, truth, g_.labels.num_classes);
  }

  Metrics evaluate(const std::vector<std::size_t>& nodes) {
    auto out = infer();
    return metrics(*out.logits, nodes);
  }

  /// Pseudo-labels from the current parameters. Training nodes keep their labels.
  PseudoLabels refresh_pseudo_labels() { return pseudo_labels_from_logits(g_, is_train_, *infer().logits); }

  /// One optimisation epoch (1-based). Returns the losses; validation metrics are filled by fit().
  EpochLog train_epoch(std::size_t epoch) {
    Partition part;
    if (model_.structural) part = partition(pseudo_);
    return cfg_.batch_size == 0 ? full_batch_epoch(epoch, part) : mini_batch_epoch(epoch, part);
  }

  TrainResult fit(std::ostream* log = nullptr) {
    TrainResult res;
    // Initial pseudo-labels come from the freshly initialised model.
    if (model_.structural) pseudo_ = refresh_pseudo_labels();
    if (log) write_log_header(*log);
    std::vector<std::vector<T>> best_params = params_.snapshot();
    PseudoLabels best_pseudo = pseudo_;
    bool have_best = false;
    for (std::size_t e = 1; e <= cfg_.epochs; ++e) {
      EpochLog entry = train_epoch(e);
      auto out = infer();
      if (!g_.splits.val.empty()) entry.val = metrics(*out.logits, g_.splits.val);
      if (!have_best || g_.splits.val.empty() || entry.val.micro_f1 > res.best_val.micro_f1) {
        have_best = true;
        res.best_epoch = e;
        res.best_val = entry.val;
        best_params = params_.snapshot();
        best_pseudo = pseudo_;
      }
      if (model_.structural && e % cfg_.refresh_period == 0)
        pseudo_ = pseudo_labels_from_logits(g_, is_train_, *out.logits);
      if (log) write_log_row(*log, entry);
      res.log.push_back(entry);
    }
    params_.restore(best_params);
    pseudo_ = best_pseudo;
    auto out = infer();
    if (out.h_struct) {
      nn::Tape<T> tape(false);
      res.mean_abs_cos = static_cast<double>(nn::abs_cosine_mean(tape, out.h_sem, out.h_struct)->item());
    }
    if (!g_.splits.test.empty()) {
      res.test = metrics(*out.logits, g_.splits.test);
      if (log) write_test_line(*log, *res.test);
    }
    res.structural_builds = builds_;
    return res;
  }

  void save(const std::filesystem::path& path) const { nn::save_checkpoint(params_.store, path); }
  void load(const std::filesystem::path& path) { nn::load_checkpoint(params_.store, path); }

 private:
  using Var = nn::Var<T>;

  struct Losses {
    Var cls, dec, total;
  };

  Losses losses(nn::Tape<T>& tape, const model::ForwardOutput<T>& out, const std::vector<std::size_t>& outputs) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < outputs.size(); ++i)
      if (is_train_[outputs[i]]) rows.push_back(i);
    Losses l;
    if (!rows.empty()) l.cls = model::classification_loss(tape, out.logits, rows, outputs, g_.labels);
    if (out.h_struct) l.dec = model::decouple_loss(tape, out.h_sem, out.h_struct, cfg_.dec_variant);
    const double alpha = cfg_.effective_alpha();
    if (l.cls) {
      l.total = model::total_loss(tape, l.cls, l.dec, alpha);
    } else if (l.dec && alpha > 0.0) {
      l.total = nn::scale(tape, l.dec, static_cast<T>(alpha));
    }
    return l;
  }

  model::ForwardOutput<T> train_forward(nn::Tape<T>& tape, const model::SemanticPlan<T>& plan,
                                        const model::BranchMatrices<T>* branches, std::size_t epoch, Rng& rng) {
    model::ForwardInputs<T> in;
    in.graph = &g_;
    in.features = &features_;
    in.plan = &plan;
    in.branches = branches;
    in.is_train = &is_train_;
    in.mode = model::MaskMode::train;
    in.seed = cfg_.seed;
    in.epoch = epoch;
    in.rng = &rng;
    in.training = true;
    return model::forward(tape, params_, model_, in);
  }

  void step(nn::Tape<T>& tape, const Var& loss) {
    tape.backward(loss);
    nn::adam_step<T>(params_.store.params(), adam_);
    params_.store.zero_grad();
  }

  static double value(const Var& v) { return v ? static_cast<double>(v->item()) : 0.0; }

  EpochLog full_batch_epoch(std::size_t epoch, const Partition& part) {
    std::optional<model::BranchMatrices<T>> branches;
    if (model_.structural)
      branches = model::branch_matrices<T>(part, full_plan_.output_nodes, full_plan_.input_nodes[g_.target()]);
    Rng rng(derive_seed(cfg_.seed, {kDropoutStream, epoch, 0}));
    nn::Tape<T> tape(true);
    auto out = train_forward(tape, full_plan_, branches ? &*branches : nullptr, epoch, rng);
    auto l = losses(tape, out, full_plan_.output_nodes);
    EpochLog e;
    e.epoch = epoch;
    e.l_cls = value(l.cls);
    e.l_dec = value(l.dec);
    e.l_total = value(l.total);
    if (l.total) step(tape, l.total);
    return e;
  }

  EpochLog mini_batch_epoch(std::size_t epoch, const Partition& part) {
    Rng shuffle(derive_seed(cfg_.seed, {kShuffleStream, epoch}));
    const auto batches = make_batches(g_.num_targets(), cfg_.batch_size, shuffle);
    EpochLog e;
    e.epoch = epoch;
    std::size_t n_cls = 0, n_dec = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      Rng sampler(derive_seed(cfg_.seed, {kSampleStream, epoch, b}));
      auto batch = build_batch<T>(g_, batches[b], cfg_.fanout, part, sampler);
      Rng rng(derive_seed(cfg_.seed, {kDropoutStream, epoch, b}));
      nn::Tape<T> tape(true);
      auto out = train_forward(tape, batch.plan, model_.structural ? &batch.branches : nullptr, epoch, rng);
      auto l = losses(tape, out, batch.plan.output_nodes);
      if (l.cls) e.l_cls += value(l.cls), ++n_cls;
      if (l.dec) e.l_dec += value(l.dec), ++n_dec;
      if (l.total) step(tape, l.total);
    }
    if (n_cls) e.l_cls /= static_cast<double>(n_cls);
    if (n_dec) e.l_dec /= static_cast<double>(n_dec);
    e.l_total = e.l_cls + cfg_.effective_alpha() * e.l_dec;
    return e;
  }

  const HetGraph& g_;
  std::vector<Metapath> metapaths_;
  TrainConfig cfg_;
  model::ModelConfig model_;
  std::vector<std::uint8_t> is_train_;
  std::vector<Var> features_;
  model::SemanticPlan<T> full_plan_;
  model::HeterSeedParams<T> params_;
  nn::AdamState<T> adam_;
  PseudoLabels pseudo_;
  std::vector<InducedGraph> graphs_;
  std::shared_ptr<const StructuralWeights> weights_;
  std::size_t builds_ = 0;
};

}  // namespace heterseed::train
