#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"

namespace heterseed {

/// A relation sequence t_1 -r_1-> t_2 ... -r_l-> t_{l+1}, stored by relation index.
struct Metapath {
  std::string name;
  std::vector<std::size_t> relations;
  std::vector<std::size_t> types;  // l + 1 entries
};

/// Sparse CSR matrix of non-negative integer path counts.
struct CountMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;
  std::vector<std::uint64_t> counts;

  std::uint64_t at(std::size_t r, std::size_t c) const {
    auto b = indices.begin() + static_cast<std::ptrdiff_t>(offsets[r]);
    auto e = indices.begin() + static_cast<std::ptrdiff_t>(offsets[r + 1]);
    auto it = std::lower_bound(b, e, c);
    return (it != e && *it == c) ? counts[static_cast<std::size_t>(it - indices.begin())] : 0;
  }

  std::size_t nnz() const { return indices.size(); }

  CountMatrix transpose() const {
    CountMatrix t;
    t.rows = cols;
    t.cols = rows;
    t.offsets.assign(cols + 1, 0);
    for (std::size_t c : indices) ++t.offsets[c + 1];
    for (std::size_t i = 0; i < cols; ++i) t.offsets[i + 1] += t.offsets[i];
    t.indices.resize(indices.size());
    t.counts.resize(counts.size());
    std::vector<std::size_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
        const std::size_t pos = cursor[indices[k]]++;
        t.indices[pos] = r;
        t.counts[pos] = counts[k];
      }
    return t;
  }
};

namespace detail {

inline CountMatrix relation_matrix(const HetGraph& g, std::size_t r) {
  if (g.out_adj.size() != g.relations.size())
    fail(ErrorCode::SchemaMismatch, "adjacency not built; call build_adjacency()");
  const Csr& adj = g.out_adj[r];
  CountMatrix m;
  m.rows = g.node_counts[g.src_type(r)];
  m.cols = g.node_counts[g.dst_type(r)];
  m.offsets.assign(m.rows + 1, 0);
  std::vector<std::size_t> row;
  for (std::size_t s = 0; s < m.rows; ++s) {
    row.assign(adj.targets.begin() + static_cast<std::ptrdiff_t>(adj.begin(s)),
               adj.targets.begin() + static_cast<std::ptrdiff_t>(adj.end(s)));
    std::sort(row.begin(), row.end());
    for (std::size_t i = 0; i < row.size();) {
      std::size_t j = i;
      while (j < row.size() && row[j] == row[i]) ++j;
      m.indices.push_back(row[i]);
      m.counts.push_back(j - i);
      i = j;
    }
    m.offsets[s + 1] = m.indices.size();
  }
  return m;
}

// Row-by-row Gustavson product with a dense accumulator.
inline CountMatrix multiply(const CountMatrix& a, const CountMatrix& b) {
  CountMatrix c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.offsets.assign(a.rows + 1, 0);
  std::vector<std::uint64_t> acc(b.cols, 0);
  std::vector<char> used(b.cols, 0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < a.rows; ++i) {
    touched.clear();
    for (std::size_t ka = a.offsets[i]; ka < a.offsets[i + 1]; ++ka) {
      const std::size_t mid = a.indices[ka];
      const std::uint64_t w = a.counts[ka];
      for (std::size_t kb = b.offsets[mid]; kb < b.offsets[mid + 1]; ++kb) {
        const std::size_t j = b.indices[kb];
        if (!used[j]) {
          used[j] = 1;
          touched.push_back(j);
        }
        acc[j] += w * b.counts[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t j : touched) {
      c.indices.push_back(j);
      c.counts.push_back(acc[j]);
      acc[j] = 0;
      used[j] = 0;
    }
    c.offsets[i + 1] = c.indices.size();
  }
  return c;
}

inline std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

inline std::size_t resolve_type_token(const HetGraph& g, const std::string& tok) {
  if (auto t = g.find_type(tok)) return *t;
  std::vector<std::size_t> hits;
  const auto low = lower(tok);
  for (std::size_t t = 0; t < g.node_types.size(); ++t) {
    const auto name = lower(g.node_types[t]);
    if (name.compare(0, low.size(), low) == 0) hits.push_back(t);
  }
  if (hits.size() != 1)
    fail(ErrorCode::UnknownMetapath, "type token '" + tok + "' matches " + std::to_string(hits.size()) + " node types");
  return hits.front();
}

}  // namespace detail

/// Checks composability and symmetry over the target type.
inline void check_metapath(const HetGraph& g, const Metapath& p) {
  if (p.relations.empty()) fail(ErrorCode::NonComposableMetapath, "empty metapath");
  for (std::size_t k = 0; k + 1 < p.relations.size(); ++k) {
    if (g.dst_type(p.relations[k]) != g.src_type(p.relations[k + 1]))
      fail(ErrorCode::NonComposableMetapath, p.name + ": '" + g.relations[p.relations[k]].name +
                                                 "' does not compose with '" +
                                                 g.relations[p.relations[k + 1]].name + "'");
  }
  const std::size_t head = g.src_type(p.relations.front());
  const std::size_t tail = g.dst_type(p.relations.back());
  if (head != tail || head != g.target())
    fail(ErrorCode::NonSymmetricMetapath, p.name + ": must start and end at target type '" + g.target_type + "'");
}

inline Metapath metapath_from_relations(const HetGraph& g, const std::vector<std::string>& names) {
  Metapath p;
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto r = g.find_relation(names[i]);
    if (!r) fail(ErrorCode::UnknownMetapath, "unknown relation '" + names[i] + "'");
    p.relations.push_back(*r);
    p.name += (i ? "," : "") + names[i];
  }
  if (!p.relations.empty()) {
    p.types.push_back(g.src_type(p.relations.front()));
    for (std::size_t r : p.relations) p.types.push_back(g.dst_type(r));
  }
  check_metapath(g, p);
  return p;
}

/// Parses "rel_a,rel_b" (relation names) or "A-P-A" (type names or unique prefixes).
inline Metapath parse_metapath(const HetGraph& g, const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  const bool by_relation = text.find(',') != std::string::npos || g.find_relation(text).has_value();
  std::istringstream ss(text);
  while (std::getline(ss, cur, by_relation ? ',' : '-'))
    if (!cur.empty()) parts.push_back(cur);
  if (by_relation) return metapath_from_relations(g, parts);

  if (parts.size() < 2) fail(ErrorCode::UnknownMetapath, "cannot parse metapath '" + text + "'");
  std::vector<std::string> rels;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    const std::size_t a = detail::resolve_type_token(g, parts[i]);
    const std::size_t b = detail::resolve_type_token(g, parts[i + 1]);
    std::vector<std::size_t> hits;
    for (std::size_t r = 0; r < g.relations.size(); ++r)
      if (g.src_type(r) == a && g.dst_type(r) == b) hits.push_back(r);
    if (hits.size() != 1)
      fail(ErrorCode::UnknownMetapath, text + ": " + std::to_string(hits.size()) + " relations from '" +
                                           g.node_types[a] + "' to '" + g.node_types[b] + "'");
    rels.push_back(g.relations[hits.front()].name);
  }
  Metapath p = metapath_from_relations(g, rels);
  p.name = text;
  return p;
}

/// Target x target matrix of metapath instance counts. Diagonal entries are kept
/// in the counts; the edge set excludes them.
struct InducedGraph {
  Metapath metapath;
  CountMatrix counts;

  std::size_t num_nodes() const { return counts.rows; }

  std::uint64_t count(std::size_t u, std::size_t v) const { return counts.at(u, v); }

  template <class F>
  void for_each_edge(F&& f) const {
    for (std::size_t u = 0; u < counts.rows; ++u)
      for (std::size_t k = counts.offsets[u]; k < counts.offsets[u + 1]; ++k)
        if (counts.indices[k] != u) f(u, counts.indices[k], counts.counts[k]);
  }

  std::size_t num_edges() const {
    std::size_t n = 0;
    for_each_edge([&](std::size_t, std::size_t, std::uint64_t) { ++n; });
    return n;
  }

  /// Neighbours of v excluding v itself.
  std::vector<std::size_t> neighbors(std::size_t v) const {
    std::vector<std::size_t> out;
    for (std::size_t k = counts.offsets[v]; k < counts.offsets[v + 1]; ++k)
      if (counts.indices[k] != v) out.push_back(counts.indices[k]);
    return out;
  }
};

/// Count matrix as the product A_{r_1} A_{r_2} ... A_{r_l} of relation adjacencies.
inline InducedGraph build_induced_graph(const HetGraph& g, const Metapath& p) {
  check_metapath(g, p);
  CountMatrix acc = detail::relation_matrix(g, p.relations.front());
  for (std::size_t k = 1; k < p.relations.size(); ++k)
    acc = detail::multiply(acc, detail::relation_matrix(g, p.relations[k]));
  return InducedGraph{p, std::move(acc)};
}

}  // namespace heterseed
