#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "heterseed/heterseed.hpp"
#include "json.hpp"

namespace heterseed::cli {

using json = nlohmann::json;
using Trainer = train::Trainer<float>;

/// Concurrency cap from HETERSEED_THREADS, defaulting to the hardware count.
inline std::size_t thread_cap() {
  if (const char* env = std::getenv("HETERSEED_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Metapath arguments may be repeated or given as one space-separated list.
inline std::vector<std::string> split_metapath_args(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (const auto& a : args) {
    std::istringstream is(a);
    std::string tok;
    while (is >> tok) out.push_back(tok);
  }
  return out;
}

/// Every target-X-target path formed by a relation and any relation leading back.
inline std::vector<Metapath> default_metapaths(const HetGraph& g) {
  std::vector<Metapath> out;
  const std::size_t t = g.target();
  for (std::size_t r = 0; r < g.num_relations(); ++r) {
    if (g.src_type(r) != t || g.dst_type(r) == t) continue;
    for (std::size_t s = 0; s < g.num_relations(); ++s) {
      if (g.src_type(s) != g.dst_type(r) || g.dst_type(s) != t) continue;
      auto p = metapath_from_relations(g, {g.relations[r].name, g.relations[s].name});
      p.name = g.relations[r].name + "," + g.relations[s].name;
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline std::vector<Metapath> resolve_metapaths(const HetGraph& g, const std::vector<std::string>& args) {
  const auto names = split_metapath_args(args);
  if (names.empty()) return default_metapaths(g);
  std::vector<Metapath> out;
  for (const auto& n : names) out.push_back(parse_metapath(g, n));
  return out;
}

/// Flags shared by `train` and `homophily-bins`. Unset flags leave the preset value.
struct TrainFlags {
  std::string graph;
  std::vector<std::string> metapaths;
  std::string preset;
  std::optional<double> lr, dropout, alpha, beta;
  std::optional<std::size_t> hidden, epochs, layers, batch_size, refresh_period;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> fanout;
  std::string dec_variant;
  bool no_shc = false, no_dec = false, no_homo = false, no_hetero = false, no_mask = false;

  void bind(CLI::App& app) {
    app.add_option("--graph", graph, "graph directory")->required();
    app.add_option("--metapaths", metapaths, "metapaths such as A-P-A or rel1,rel2 (space separated or repeated)");
    app.add_option("--preset", preset, "hyperparameter preset")->check(CLI::IsMember(train::preset_names()));
    app.add_option("--lr", lr, "learning rate");
    app.add_option("--hidden", hidden, "hidden dimension");
    app.add_option("--dropout", dropout, "dropout rate");
    app.add_option("--epochs", epochs, "training epochs");
    app.add_option("--layers", layers, "semantic layers");
    app.add_option("--alpha", alpha, "decoupling loss weight");
    app.add_option("--beta", beta, "label masking rate");
    app.add_option("--dec-variant", dec_variant, "decoupling loss")->check(CLI::IsMember({"cosine", "crosscov"}));
    app.add_option("--batch-size", batch_size, "target nodes per batch (0: full batch)");
    app.add_option("--fanout", fanout, "neighbours sampled per hop, nearest hop first");
    app.add_option("--refresh-period", refresh_period, "epochs between pseudo-label refreshes");
    app.add_option("--seed", seed, "random seed");
    app.add_flag("--no-shc", no_shc, "semantic channel only");
    app.add_flag("--no-dec", no_dec, "drop the decoupling loss");
    app.add_flag("--no-homo", no_homo, "disable the homophilic branch");
    app.add_flag("--no-hetero", no_hetero, "disable the heterophilic branch");
    app.add_flag("--no-mask", no_mask, "disable label masking");
  }

  train::TrainConfig config() const {
    train::TrainConfig c = preset.empty() ? train::TrainConfig{} : train::preset(preset);
    if (lr) c.lr = *lr;
    if (hidden) c.hidden_dim = *hidden;
    if (dropout) c.dropout = *dropout;
    if (epochs) c.epochs = *epochs;
    if (layers) c.layers = *layers;
    if (alpha) c.alpha = *alpha;
    if (beta) c.beta = *beta;
    if (batch_size) c.batch_size = *batch_size;
    if (refresh_period) c.refresh_period = *refresh_period;
    if (seed) c.seed = *seed;
    if (!fanout.empty()) c.fanout = fanout;
    if (c.batch_size > 0 && c.fanout.size() != c.layers && fanout.empty()) c.fanout.assign(c.layers, c.fanout.front());
    if (!dec_variant.empty())
      c.dec_variant = dec_variant == "cosine" ? train::DecoupleVariant::cosine : train::DecoupleVariant::crosscov;
    c.structural = !no_shc;
    c.decouple = !no_dec;
    c.homo_branch = !no_homo;
    c.hetero_branch = !no_hetero;
    c.label_masking = !no_mask;
    train::validate(c);
    return c;
  }
};

inline json config_to_json(const train::TrainConfig& c) {
  return json{{"lr", c.lr},
              {"hidden_dim", c.hidden_dim},
              {"dropout", c.dropout},
              {"epochs", c.epochs},
              {"layers", c.layers},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"batch_size", c.batch_size},
              {"fanout", c.fanout},
              {"seed", c.seed},
              {"dec_variant", c.dec_variant == train::DecoupleVariant::cosine ? "cosine" : "crosscov"},
              {"refresh_period", c.refresh_period},
              {"structural", c.structural},
              {"homo_branch", c.homo_branch},
              {"hetero_branch", c.hetero_branch},
              {"label_masking", c.label_masking},
              {"decouple", c.decouple}};
}

inline train::TrainConfig config_from_json(const json& j) {
  train::TrainConfig c;
  c.lr = j.at("lr");
  c.hidden_dim = j.at("hidden_dim");
  c.dropout = j.at("dropout");
  c.epochs = j.at("epochs");
  c.layers = j.at("layers");
  c.alpha = j.at("alpha");
  c.beta = j.at("beta");
  c.batch_size = j.at("batch_size");
  c.fanout = j.at("fanout").get<std::vector<std::size_t>>();
  c.seed = j.at("seed");
  c.dec_variant = j.at("dec_variant") == "cosine" ? train::DecoupleVariant::cosine : train::DecoupleVariant::crosscov;
  c.refresh_period = j.at("refresh_period");
  c.structural = j.at("structural");
  c.homo_branch = j.at("homo_branch");
  c.hetero_branch = j.at("hetero_branch");
  c.label_masking = j.at("label_masking");
  c.decouple = j.at("decouple");
  return c;
}

inline json pseudo_to_json(const train::PseudoLabels& p) {
  json j;
  if (p.mode == LabelMode::single) {
    j["mode"] = "single";
    j["values"] = p.single;
  } else {
    j["mode"] = "multi";
    j["values"] = p.multi;
  }
  std::vector<int> gt;
  for (auto v : p.provenance) gt.push_back(v == train::Provenance::ground_truth ? 1 : 0);
  j["ground_truth"] = gt;
  return j;
}

inline train::PseudoLabels pseudo_from_json(const json& j) {
  train::PseudoLabels p;
  if (j.at("mode") == "single") {
    p.mode = LabelMode::single;
    p.single = j.at("values").get<std::vector<std::int32_t>>();
  } else {
    p.mode = LabelMode::multi;
    p.multi = j.at("values").get<std::vector<std::vector<std::uint8_t>>>();
  }
  for (int v : j.at("ground_truth").get<std::vector<int>>())
    p.provenance.push_back(v ? train::Provenance::ground_truth : train::Provenance::predicted);
  return p;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& ckpt) {
  return std::filesystem::path(ckpt.string() + ".json");
}

inline void write_sidecar(const std::filesystem::path& ckpt, const train::TrainConfig& cfg,
                          const std::vector<std::string>& metapaths, const train::PseudoLabels& pseudo) {
  std::ofstream os(sidecar_path(ckpt));
  if (!os) fail(ErrorCode::IoFailure, "cannot write " + sidecar_path(ckpt).string());
  json j{{"config", config_to_json(cfg)}, {"metapaths", metapaths}, {"pseudo_labels", pseudo_to_json(pseudo)}};
  os << j.dump(2) << '\n';
}

inline std::vector<std::string> metapath_names(const std::vector<Metapath>& mps) {
  std::vector<std::string> out;
  for (const auto& p : mps) out.push_back(p.name);
  return out;
}

inline std::string fmt(double x) { return train::format_metric(x); }

struct SeedOutcome {
  train::TrainResult result;
  std::string log;
};

inline int cmd_train(const TrainFlags& f, const std::string& log_path, const std::string& ckpt, std::size_t seeds,
                     std::ostream& out) {
  const auto cfg = f.config();
  const HetGraph g = load_graph(f.graph);
  const auto mps = resolve_metapaths(g, f.metapaths);

  if (seeds <= 1) {
    Trainer t(g, mps, cfg);
    std::ofstream file;
    std::ostream* log = &out;
    if (!log_path.empty()) {
      file.open(log_path);
      if (!file) fail(ErrorCode::IoFailure, "cannot write " + log_path);
      log = &file;
    }
    auto res = t.fit(log);
    if (!ckpt.empty()) {
      t.save(ckpt);
      write_sidecar(ckpt, cfg, metapath_names(mps), t.pseudo_labels());
    }
    if (log != &out && res.test) train::write_test_line(out, *res.test);
    return 0;
  }

  // Independent seeded runs; each writes only its own slot.
  std::vector<SeedOutcome> outcomes(seeds);
  std::vector<std::string> errors(seeds);
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(mu);
        if (next == seeds) return;
        k = next++;
      }
      try {
        auto c = cfg;
        c.seed = cfg.seed + k;
        Trainer t(g, mps, c);
        std::ostringstream log;
        outcomes[k].result = t.fit(&log);
        outcomes[k].log = log.str();
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < std::min(seeds, thread_cap()); ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  if (!log_path.empty()) {
    for (std::size_t k = 0; k < seeds; ++k) {
      std::ofstream os(log_path + ".seed" + std::to_string(cfg.seed + k));
      os << outcomes[k].log;
    }
  }
  std::vector<double> macro, micro, ap;
  out << "seed\ttest_macro\ttest_micro\ttest_ap\n";
  for (std::size_t k = 0; k < seeds; ++k) {
    const auto& t = outcomes[k].result.test;
    if (!t) continue;
    macro.push_back(t->macro_f1);
    micro.push_back(t->micro_f1);
    ap.push_back(t->average_precision);
    out << cfg.seed + k << '\t' << fmt(t->macro_f1) << '\t' << fmt(t->micro_f1) << '\t' << fmt(t->average_precision) << '\n';
  }
  auto stat = [](const std::vector<double>& v) {
    if (v.empty()) return std::string("nan");
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    s = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
    return fmt(m) + " ± " + fmt(s);
  };
  out << "mean\t" << stat(macro) << '\t' << stat(micro) << '\t' << stat(ap) << '\n';
  return 0;
}

inline int cmd_eval(const std::string& graph, const std::string& ckpt, const std::string& split, std::ostream& out) {
  const HetGraph g = load_graph(graph);
  std::ifstream is(sidecar_path(ckpt));
  if (!is) fail(ErrorCode::MissingFile, "missing checkpoint metadata " + sidecar_path(ckpt).string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    fail(ErrorCode::BadCheckpoint, std::string("bad checkpoint metadata: ") + e.what());
  }
  const auto cfg = config_from_json(j.at("config"));
  std::vector<Metapath> mps;
  for (const auto& name : j.at("metapaths").get<std::vector<std::string>>()) mps.push_back(parse_metapath(g, name));
  Trainer t(g, mps, cfg);
  t.load(ckpt);
  t.set_pseudo_labels(pseudo_from_json(j.at("pseudo_labels")));
  const auto& nodes = split == "train" ? g.splits.train : split == "val" ? g.splits.val : g.splits.test;
  const auto m = t.evaluate(nodes);
  out << "split\tmacro_f1\tmicro_f1\tap\n"
      << split << '\t' << fmt(m.macro_f1) << '\t' << fmt(m.micro_f1) << '\t' << fmt(m.average_precision) << '\n';
  return 0;
}

inline int cmd_analyze(const std::string& graph, const std::vector<std::string>& metapaths, std::ostream& out) {
  const HetGraph g = load_graph(graph);
  std::vector<InducedGraph> graphs;
  for (const auto& p : resolve_metapaths(g, metapaths)) graphs.push_back(build_induced_graph(g, p));
  const auto rep = similarity_vs_homophily(g, graphs);
  out << "metapath\tedges\thomophily\tmean_cosine\n";
  for (const auto& r : rep.rows) out << r.metapath << '\t' << r.num_edges << '\t' << fmt(r.homophily) << '\t' << fmt(r.mean_cosine) << '\n';
  out << "fit\tslope=" << fmt(rep.fit.slope) << "\tintercept=" << fmt(rep.fit.intercept) << "\tr2=" << fmt(rep.fit.r2) << '\n';
  return 0;
}

inline int cmd_bins(const TrainFlags& f, std::ostream& out) {
  const auto cfg = f.config();
  const HetGraph g = load_graph(f.graph);
  const auto mps = resolve_metapaths(g, f.metapaths);
  Trainer t(g, mps, cfg);
  t.fit(nullptr);
  std::vector<InducedGraph> graphs;
  for (const auto& p : mps) graphs.push_back(build_induced_graph(g, p));
  const auto local = local_homophily(graphs, g.labels);
  std::vector<std::optional<double>> test_local(local.size());
  for (std::size_t v : g.splits.test) test_local[v] = local[v];
  const auto bins = bin_by_local_homophily(test_local);
  const auto logits = t.infer().logits;
  out << "bin\tcount\tmicro_f1\tmacro_f1\n";
  const char* names[] = {"[0,0.2]", "(0.2,0.4]", "(0.4,0.6]", "(0.6,0.8]", "(0.8,1]"};
  for (std::size_t b = 0; b < kHomophilyBins; ++b) {
    out << names[b] << '\t' << bins[b].size();
    if (bins[b].empty()) {
      out << "\tnan\tnan\n";
      continue;
    }
    const auto m = t.metrics(*logits, bins[b]);
    out << '\t' << fmt(m.micro_f1) << '\t' << fmt(m.macro_f1) << '\n';
  }
  return 0;
}

inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::string tok;
  std::istringstream is(text);
  while (std::getline(is, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidConfig, "bad grid value '" + tok + "'");
    }
  }
  return out;
}

inline int cmd_bias(const std::string& grid, std::size_t trials, std::uint64_t seed, const std::string& path,
                    std::ostream& out) {
  const auto rows = synth::bias_simulation(parse_grid(grid), trials, seed);
  std::ofstream file;
  std::ostream* os = &out;
  if (!path.empty()) {
    file.open(path);
    if (!file) fail(ErrorCode::IoFailure, "cannot write " + path);
    os = &file;
  }
  *os << "q\tempirical\tclosed_form\tabs_error\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.2f\t%.12f\t%.12f\t%.3e\n", r.q, r.empirical, r.closed_form,
                  std::abs(r.empirical - r.closed_form));
    *os << buf;
  }
  return 0;
}

/// Exit codes: 0 success, 1 usage or configuration error, 2 data error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Heterogeneous graph node classification with semantic and structural channels"};
  app.name("heterseed");
  app.require_subcommand(1);

  TrainFlags train_flags;
  std::string log_path, ckpt;
  std::size_t seeds = 1;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_flags.bind(*train_cmd);
  train_cmd->add_option("--log", log_path, "per-epoch TSV log (default: stdout)");
  train_cmd->add_option("--checkpoint", ckpt, "write the best checkpoint here");
  train_cmd->add_option("--parallel-seeds", seeds, "independent runs with seeds seed, seed+1, ...")->check(CLI::PositiveNumber);

  std::string eval_graph, eval_ckpt, eval_split = "test";
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--graph", eval_graph, "graph directory")->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--split", eval_split, "split to evaluate")->check(CLI::IsMember({"train", "val", "test"}));

  std::string an_graph;
  std::vector<std::string> an_mps;
  auto* an_cmd = app.add_subcommand("analyze", "per-metapath homophily and feature similarity");
  an_cmd->add_option("--graph", an_graph, "graph directory")->required();
  an_cmd->add_option("--metapaths", an_mps, "metapaths");

  auto* gen_cmd = app.add_subcommand("gen-synth", "write a synthetic graph");
  gen_cmd->require_subcommand(1);
  synth::Theorem1Config t1;
  std::string t1_out;
  auto* t1_cmd = gen_cmd->add_subcommand("theorem1", "symmetric two-class author graph");
  t1_cmd->add_option("--n", t1.n, "authors per class");
  t1_cmd->add_option("--m-same", t1.m_same, "papers per same-class pair");
  t1_cmd->add_option("--m-diff", t1.m_diff, "papers per cross-class pair");
  t1_cmd->add_option("--feature-dim", t1.feature_dim, "author feature dimension");
  t1_cmd->add_flag("--baseline-only", t1.baseline_only, "only the one-paper-per-cross-pair wiring");
  t1_cmd->add_option("--seed", t1.seed, "seed for the shared feature vector");
  t1_cmd->add_option("--out", t1_out, "output directory")->required();

  synth::SbmBaseConfig base_cfg;
  std::string base_out;
  auto* base_cmd = gen_cmd->add_subcommand("sbm-base", "homophilous clique graph to inject labels into");
  base_cmd->add_option("--groups", base_cfg.groups, "number of cliques");
  base_cmd->add_option("--group-size", base_cfg.group_size, "clique size");
  base_cmd->add_option("--classes", base_cfg.num_classes, "number of classes");
  base_cmd->add_option("--feature-dim", base_cfg.feature_dim, "feature dimension");
  base_cmd->add_option("--noise", base_cfg.noise, "feature noise standard deviation");
  base_cmd->add_option("--seed", base_cfg.seed, "random seed");
  base_cmd->add_option("--out", base_out, "output directory")->required();

  synth::SbmInjectConfig inj;
  std::string sbm_base_dir, sbm_out, sbm_mode = "low";
  std::vector<std::string> sbm_mps;
  auto* sbm_cmd = gen_cmd->add_subcommand("sbm", "relabel metapath cliques with swap ratio rho");
  sbm_cmd->add_option("--base", sbm_base_dir, "base graph directory")->required();
  sbm_cmd->add_option("--metapaths", sbm_mps, "metapaths defining the cliques");
  sbm_cmd->add_option("--rho", inj.rho, "swap ratio")->check(CLI::Range(0.0, 1.0));
  sbm_cmd->add_option("--mode", sbm_mode, "injection mode")->check(CLI::IsMember({"high", "low", "mixed"}));
  sbm_cmd->add_option("--seed", inj.seed, "random seed");
  sbm_cmd->add_option("--out", sbm_out, "output directory")->required();

  std::string q_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1", bias_out;
  std::size_t trials = 1000;
  std::uint64_t bias_seed = 0;
  auto* bias_cmd = app.add_subcommand("bias-sim", "squared bias of a mixed-neighbourhood smoother");
  bias_cmd->add_option("--q-grid", q_grid, "comma-separated heterophilic masses");
  bias_cmd->add_option("--trials", trials, "random neighbourhoods per q")->check(CLI::PositiveNumber);
  bias_cmd->add_option("--seed", bias_seed, "random seed");
  bias_cmd->add_option("--out", bias_out, "output TSV (default: stdout)");

  TrainFlags bin_flags;
  auto* bins_cmd = app.add_subcommand("homophily-bins", "test metrics by local homophily bin");
  bin_flags.bind(*bins_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_flags, log_path, ckpt, seeds, out);
    if (*eval_cmd) return cmd_eval(eval_graph, eval_ckpt, eval_split, out);
    if (*an_cmd) return cmd_analyze(an_graph, an_mps, out);
    if (*t1_cmd) {
      save_graph(synth::gen_theorem1(t1), t1_out);
      return 0;
    }
    if (*base_cmd) {
      save_graph(synth::sbm_base(base_cfg), base_out);
      return 0;
    }
    if (*sbm_cmd) {
      const HetGraph base = load_graph(sbm_base_dir);
      inj.mode = sbm_mode == "high" ? synth::InjectMode::high : sbm_mode == "low" ? synth::InjectMode::low : synth::InjectMode::mixed;
      save_graph(synth::sbm_inject(base, resolve_metapaths(base, sbm_mps), inj), sbm_out);
      return 0;
    }
    if (*bias_cmd) return cmd_bias(q_grid, trials, bias_seed, bias_out, out);
    if (*bins_cmd) return cmd_bins(bin_flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    const bool usage = e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::SameClassPairRequired;
    return usage ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace heterseed::cli
