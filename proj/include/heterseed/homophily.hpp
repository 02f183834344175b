#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "heterseed/metapath.hpp"

namespace heterseed {

/// Fraction of edges of E_p whose endpoints share a label. Edges with an
/// unlabeled endpoint are skipped.
inline double global_homophily(const InducedGraph& ig, const Labels& labels) {
  std::size_t total = 0, same = 0;
  ig.for_each_edge([&](std::size_t u, std::size_t v, std::uint64_t) {
    if (!labels.has(u) || !labels.has(v)) return;
    ++total;
    if (labels.same(u, v)) ++same;
  });
  if (total == 0) fail(ErrorCode::EmptyEdgeSet, "metapath '" + ig.metapath.name + "' induces no labeled edges");
  return static_cast<double>(same) / static_cast<double>(total);
}

inline double average_homophily(std::span<const double> per_metapath) {
  if (per_metapath.empty()) fail(ErrorCode::EmptyList, "no metapath homophily values");
  return std::accumulate(per_metapath.begin(), per_metapath.end(), 0.0) / static_cast<double>(per_metapath.size());
}

/// Per node fraction of same-label neighbours; nullopt for isolated or unlabeled nodes.
inline std::vector<std::optional<double>> local_homophily(const InducedGraph& ig, const Labels& labels) {
  std::vector<std::optional<double>> out(ig.num_nodes());
  for (std::size_t v = 0; v < ig.num_nodes(); ++v) {
    if (!labels.has(v)) continue;
    std::size_t total = 0, same = 0;
    for (std::size_t k = ig.counts.offsets[v]; k < ig.counts.offsets[v + 1]; ++k) {
      const std::size_t u = ig.counts.indices[k];
      if (u == v || !labels.has(u)) continue;
      ++total;
      if (labels.same(u, v)) ++same;
    }
    if (total) out[v] = static_cast<double>(same) / static_cast<double>(total);
  }
  return out;
}

/// Local homophily over the union of several metapath neighbourhoods.
inline std::vector<std::optional<double>> local_homophily(std::span<const InducedGraph> graphs, const Labels& labels) {
  if (graphs.empty()) return {};
  const std::size_t n = graphs.front().num_nodes();
  std::vector<std::optional<double>> out(n);
  std::vector<std::size_t> nbrs;
  for (std::size_t v = 0; v < n; ++v) {
    if (!labels.has(v)) continue;
    nbrs.clear();
    for (const auto& ig : graphs)
      for (std::size_t k = ig.counts.offsets[v]; k < ig.counts.offsets[v + 1]; ++k) nbrs.push_back(ig.counts.indices[k]);
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    std::size_t total = 0, same = 0;
    for (std::size_t u : nbrs) {
      if (u == v || !labels.has(u)) continue;
      ++total;
      if (labels.same(u, v)) ++same;
    }
    if (total) out[v] = static_cast<double>(same) / static_cast<double>(total);
  }
  return out;
}

inline constexpr std::size_t kHomophilyBins = 5;

/// Bin index for (0,0.2], (0.2,0.4], ..., (0.8,1.0]; exactly 0 goes to the first bin.
inline std::size_t homophily_bin(double h) {
  constexpr std::array<double, 4> upper{0.2, 0.4, 0.6, 0.8};
  for (std::size_t b = 0; b < upper.size(); ++b)
    if (h <= upper[b]) return b;
  return 4;
}

inline std::array<std::vector<std::size_t>, kHomophilyBins> bin_by_local_homophily(
    std::span<const std::optional<double>> values) {
  std::array<std::vector<std::size_t>, kHomophilyBins> bins;
  for (std::size_t v = 0; v < values.size(); ++v)
    if (values[v]) bins[homophily_bin(*values[v])].push_back(v);
  return bins;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  LinearFit fit;
  const std::size_t n = x.size();
  if (n == 0 || n != y.size()) return fit;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
  }
  fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

struct MetapathSimilarity {
  std::string metapath;
  std::size_t num_edges = 0;
  double mean_cosine = 0.0;
  double homophily = 0.0;
};

struct SimilarityReport {
  std::vector<MetapathSimilarity> rows;
  LinearFit fit;  // homophily regressed on mean cosine
};

/// Cosine of two feature rows; 0 when either row is all zeros.
inline double feature_cosine(const FeatureMatrix& f, std::size_t u, std::size_t v) {
  double dot = 0, nu = 0, nv = 0;
  const float* a = f.row(u);
  const float* b = f.row(v);
  for (std::size_t c = 0; c < f.cols; ++c) {
    dot += double(a[c]) * double(b[c]);
    nu += double(a[c]) * double(a[c]);
    nv += double(b[c]) * double(b[c]);
  }
  if (nu == 0 || nv == 0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline SimilarityReport similarity_vs_homophily(const HetGraph& g, std::span<const InducedGraph> graphs) {
  const auto& feat = g.features.at(g.target());
  if (!feat) fail(ErrorCode::MissingFeatures, "target type '" + g.target_type + "' has no features");
  SimilarityReport rep;
  std::vector<double> xs, ys;
  for (const auto& ig : graphs) {
    MetapathSimilarity row;
    row.metapath = ig.metapath.name;
    double sum = 0;
    ig.for_each_edge([&](std::size_t u, std::size_t v, std::uint64_t) {
      sum += feature_cosine(*feat, u, v);
      ++row.num_edges;
    });
    row.mean_cosine = row.num_edges ? sum / static_cast<double>(row.num_edges) : 0.0;
    row.homophily = global_homophily(ig, g.labels);
    xs.push_back(row.mean_cosine);
    ys.push_back(row.homophily);
    rep.rows.push_back(std::move(row));
  }
  rep.fit = least_squares(xs, ys);
  return rep;
}

}  // namespace heterseed
