#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "heterseed/error.hpp"

namespace heterseed {

struct RelationType {
  std::string name;
  std::string src;
  std::string dst;

  bool operator==(const RelationType&) const = default;
};

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;

  bool operator==(const Edge&) const = default;
};

/// Row-major dense f32 matrix, the storage format of node features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  const float* row(std::size_t r) const { return values.data() + r * cols; }

  bool operator==(const FeatureMatrix&) const = default;
};

/// Compressed adjacency: neighbours of node i are targets[offsets[i] .. offsets[i+1]).
struct Csr {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> targets;

  std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  std::size_t begin(std::size_t i) const { return offsets[i]; }
  std::size_t end(std::size_t i) const { return offsets[i + 1]; }
};

enum class LabelMode { single, multi };

/// Target-node labels. Unlabeled nodes hold -1 (single) or an empty vector (multi).
struct Labels {
  LabelMode mode = LabelMode::single;
  std::size_t num_classes = 0;
  std::vector<std::int32_t> single;
  std::vector<std::vector<std::uint8_t>> multi;

  std::size_t size() const { return mode == LabelMode::single ? single.size() : multi.size(); }

  bool has(std::size_t v) const {
    return mode == LabelMode::single ? single[v] >= 0 : !multi[v].empty();
  }

  // Multi-label nodes count as sharing a label when their label sets intersect.
  bool same(std::size_t u, std::size_t v) const {
    if (mode == LabelMode::single) return single[u] == single[v];
    const auto& a = multi[u];
    const auto& b = multi[v];
    for (std::size_t c = 0; c < a.size() && c < b.size(); ++c)
      if (a[c] && b[c]) return true;
    return false;
  }

  static Labels make_single(std::size_t num_classes, std::vector<std::int32_t> values) {
    Labels l;
    l.mode = LabelMode::single;
    l.num_classes = num_classes;
    l.single = std::move(values);
    return l;
  }

  bool operator==(const Labels&) const = default;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  bool operator==(const Splits&) const = default;
};

/// Typed heterogeneous graph. Edges are directed; reverse relations must be
/// declared explicitly. Call build_adjacency() after filling the edge lists.
struct HetGraph {
  std::vector<std::string> node_types;
  std::vector<std::size_t> node_counts;
  std::vector<RelationType> relations;
  std::vector<std::vector<Edge>> edges;
  std::vector<std::optional<FeatureMatrix>> features;
  std::string target_type;
  Labels labels;
  Splits splits;

  // Derived per relation: out_adj[r] is indexed by source node, in_adj[r] by destination node.
  std::vector<Csr> out_adj;
  std::vector<Csr> in_adj;

  std::size_t num_types() const { return node_types.size(); }
  std::size_t num_relations() const { return relations.size(); }

  std::optional<std::size_t> find_type(const std::string& name) const {
    for (std::size_t i = 0; i < node_types.size(); ++i)
      if (node_types[i] == name) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> find_relation(const std::string& name) const {
    for (std::size_t i = 0; i < relations.size(); ++i)
      if (relations[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t type_index(const std::string& name) const {
    auto t = find_type(name);
    if (!t) fail(ErrorCode::SchemaMismatch, "unknown node type '" + name + "'");
    return *t;
  }

  std::size_t relation_index(const std::string& name) const {
    auto r = find_relation(name);
    if (!r) fail(ErrorCode::SchemaMismatch, "unknown relation '" + name + "'");
    return *r;
  }

  std::size_t src_type(std::size_t r) const { return type_index(relations[r].src); }
  std::size_t dst_type(std::size_t r) const { return type_index(relations[r].dst); }
  std::size_t target() const { return type_index(target_type); }
  std::size_t num_targets() const { return node_counts[target()]; }

  void build_adjacency() {
    out_adj.assign(relations.size(), Csr{});
    in_adj.assign(relations.size(), Csr{});
    for (std::size_t r = 0; r < relations.size(); ++r) {
      out_adj[r] = make_csr(edges[r], node_counts[src_type(r)], /*by_src=*/true);
      in_adj[r] = make_csr(edges[r], node_counts[dst_type(r)], /*by_src=*/false);
    }
  }

  bool operator==(const HetGraph& o) const {
    return node_types == o.node_types && node_counts == o.node_counts && relations == o.relations &&
           edges == o.edges && features == o.features && target_type == o.target_type &&
           labels == o.labels && splits == o.splits;
  }

 private:
  // Stable counting sort so neighbour order follows edge-list order.
  static Csr make_csr(const std::vector<Edge>& es, std::size_t n, bool by_src) {
    Csr csr;
    csr.offsets.assign(n + 1, 0);
    for (const auto& e : es) ++csr.offsets[(by_src ? e.src : e.dst) + 1];
    for (std::size_t i = 0; i < n; ++i) csr.offsets[i + 1] += csr.offsets[i];
    csr.targets.resize(es.size());
    std::vector<std::size_t> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
    for (const auto& e : es) {
      const std::size_t key = by_src ? e.src : e.dst;
      csr.targets[cursor[key]++] = by_src ? e.dst : e.src;
    }
    return csr;
  }
};

/// Returns one human-readable line per violated invariant; empty iff the graph is valid.
inline std::vector<std::string> validate(const HetGraph& g) {
  std::vector<std::string> out;
  if (g.node_counts.size() != g.node_types.size())
    out.push_back("node_counts has " + std::to_string(g.node_counts.size()) + " entries for " +
                  std::to_string(g.node_types.size()) + " node types");
  if (g.node_types.size() + g.relations.size() <= 2)
    out.push_back("not heterogeneous: |T| + |R| = " +
                  std::to_string(g.node_types.size() + g.relations.size()) + " (must exceed 2)");
  if (g.edges.size() != g.relations.size())
    out.push_back("edge lists (" + std::to_string(g.edges.size()) + ") do not match relations (" +
                  std::to_string(g.relations.size()) + ")");
  if (!out.empty()) return out;

  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    const auto& rel = g.relations[r];
    auto s = g.find_type(rel.src);
    auto d = g.find_type(rel.dst);
    if (!s || !d) {
      out.push_back("relation '" + rel.name + "' references unknown node type");
      continue;
    }
    for (const auto& e : g.edges[r]) {
      if (e.src >= g.node_counts[*s] || e.dst >= g.node_counts[*d]) {
        out.push_back("relation '" + rel.name + "' edge (" + std::to_string(e.src) + ", " +
                      std::to_string(e.dst) + ") out of range");
        break;
      }
    }
  }

  for (std::size_t t = 0; t < g.features.size() && t < g.node_types.size(); ++t) {
    const auto& f = g.features[t];
    if (f && (f->rows != g.node_counts[t] || f->values.size() != f->rows * f->cols))
      out.push_back("features of type '" + g.node_types[t] + "' have inconsistent shape");
  }

  auto target = g.find_type(g.target_type);
  if (!target) {
    out.push_back("unknown target type '" + g.target_type + "'");
    return out;
  }
  const std::size_t n = g.node_counts[*target];

  const auto& lab = g.labels;
  if (lab.size() != n)
    out.push_back("labels cover " + std::to_string(lab.size()) + " nodes, target type has " +
                  std::to_string(n));
  if (lab.mode == LabelMode::single) {
    for (std::size_t v = 0; v < lab.single.size(); ++v)
      if (lab.single[v] >= static_cast<std::int64_t>(lab.num_classes) || lab.single[v] < -1)
        out.push_back("label of node " + std::to_string(v) + " outside [0, C)");
  } else {
    for (std::size_t v = 0; v < lab.multi.size(); ++v) {
      const auto& m = lab.multi[v];
      if (m.empty()) continue;
      if (m.size() != lab.num_classes ||
          std::any_of(m.begin(), m.end(), [](std::uint8_t b) { return b > 1; }))
        out.push_back("multi-label vector of node " + std::to_string(v) + " is not in {0,1}^C");
    }
  }

  std::unordered_map<std::size_t, int> seen;
  for (const auto* split : {&g.splits.train, &g.splits.val, &g.splits.test}) {
    for (std::size_t v : *split) {
      if (v >= n) out.push_back("split index " + std::to_string(v) + " is not a target node");
      if (++seen[v] == 2) out.push_back("split index " + std::to_string(v) + " appears more than once");
    }
  }
  return out;
}

}  // namespace heterseed
