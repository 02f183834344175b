#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "heterseed/binary_io.hpp"
#include "heterseed/error.hpp"
#include "heterseed/graph.hpp"
#include "json.hpp"

namespace heterseed {

// On-disk layout of a graph directory:
//   meta.json               schema, counts, target type, num_classes, label_mode
//   edges_<relation>.tsv    "src\tdst" per line
//   features_<type>.bin     u64 rows, u64 cols, rows*cols f32 (all little-endian); optional
//   labels.tsv              "node\tlabel" or "node\t0,1,0"
//   splits.tsv              "node\ttrain|val|test"

namespace detail {

inline std::size_t parse_index(const std::string& tok, const std::string& where) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    fail(ErrorCode::SchemaMismatch, where + ": bad integer '" + tok + "'");
  return v;
}

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

inline std::ifstream open_required(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, p.string());
  return in;
}

inline FeatureMatrix read_features(const std::filesystem::path& p) {
  auto in = open_required(p);
  std::uint64_t rows = 0, cols = 0;
  if (!read_le(in, rows) || !read_le(in, cols)) fail(ErrorCode::SchemaMismatch, p.string() + ": truncated header");
  FeatureMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.values.resize(rows * cols);
  for (auto& v : m.values)
    if (!read_le(in, v)) fail(ErrorCode::SchemaMismatch, p.string() + ": truncated payload");
  return m;
}

inline void write_features(const std::filesystem::path& p, const FeatureMatrix& m) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, p.string());
  write_le<std::uint64_t>(out, m.rows);
  write_le<std::uint64_t>(out, m.cols);
  for (float v : m.values) write_le(out, v);
  if (!out) fail(ErrorCode::IoFailure, p.string());
}

}  // namespace detail

inline HetGraph load_graph(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  using nlohmann::json;
  if (!fs::is_directory(dir)) fail(ErrorCode::MissingFile, dir.string() + " is not a directory");

  json meta;
  {
    auto in = detail::open_required(dir / "meta.json");
    try {
      in >> meta;
    } catch (const json::exception& e) {
      fail(ErrorCode::SchemaMismatch, "meta.json: " + std::string(e.what()));
    }
  }

  HetGraph g;
  try {
    for (const auto& t : meta.at("node_types")) {
      g.node_types.push_back(t.at("name").get<std::string>());
      g.node_counts.push_back(t.at("count").get<std::size_t>());
    }
    for (const auto& r : meta.at("relations"))
      g.relations.push_back({r.at("name").get<std::string>(), r.at("src").get<std::string>(),
                             r.at("dst").get<std::string>()});
    g.target_type = meta.at("target_type").get<std::string>();
    g.labels.num_classes = meta.at("num_classes").get<std::size_t>();
    const auto mode = meta.value("label_mode", std::string("single"));
    if (mode == "single")
      g.labels.mode = LabelMode::single;
    else if (mode == "multi")
      g.labels.mode = LabelMode::multi;
    else
      fail(ErrorCode::SchemaMismatch, "label_mode must be single or multi, got '" + mode + "'");
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaMismatch, "meta.json: " + std::string(e.what()));
  }

  for (const auto& r : g.relations) {
    if (!g.find_type(r.src) || !g.find_type(r.dst))
      fail(ErrorCode::SchemaMismatch, "relation '" + r.name + "' references unknown node type");
  }
  const auto target = g.find_type(g.target_type);
  if (!target) fail(ErrorCode::SchemaMismatch, "unknown target type '" + g.target_type + "'");
  const std::size_t n = g.node_counts[*target];

  g.edges.resize(g.relations.size());
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    const auto path = dir / ("edges_" + g.relations[r].name + ".tsv");
    auto in = detail::open_required(path);
    const std::size_t ns = g.node_counts[g.src_type(r)];
    const std::size_t nd = g.node_counts[g.dst_type(r)];
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = detail::split_fields(line, '\t');
      if (f.size() != 2) fail(ErrorCode::SchemaMismatch, path.string() + ": expected two columns");
      Edge e{detail::parse_index(f[0], path.string()), detail::parse_index(f[1], path.string())};
      if (e.src >= ns || e.dst >= nd)
        fail(ErrorCode::IndexOutOfRange, path.string() + ": edge (" + f[0] + ", " + f[1] + ")");
      g.edges[r].push_back(e);
    }
  }

  g.features.resize(g.node_types.size());
  for (std::size_t t = 0; t < g.node_types.size(); ++t) {
    const auto path = dir / ("features_" + g.node_types[t] + ".bin");
    if (fs::exists(path)) {
      g.features[t] = detail::read_features(path);
      if (g.features[t]->rows != g.node_counts[t])
        fail(ErrorCode::SchemaMismatch, path.string() + ": row count differs from node count");
    }
  }

  if (g.labels.mode == LabelMode::single)
    g.labels.single.assign(n, -1);
  else
    g.labels.multi.assign(n, {});
  {
    const auto path = dir / "labels.tsv";
    auto in = detail::open_required(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = detail::split_fields(line, '\t');
      if (f.size() != 2) fail(ErrorCode::SchemaMismatch, path.string() + ": expected two columns");
      const std::size_t v = detail::parse_index(f[0], path.string());
      if (v >= n) fail(ErrorCode::IndexOutOfRange, path.string() + ": node " + f[0]);
      if (g.labels.mode == LabelMode::single) {
        const std::size_t c = detail::parse_index(f[1], path.string());
        if (c >= g.labels.num_classes) fail(ErrorCode::IndexOutOfRange, path.string() + ": label " + f[1]);
        g.labels.single[v] = static_cast<std::int32_t>(c);
      } else {
        auto bits = detail::split_fields(f[1], ',');
        if (bits.size() != g.labels.num_classes)
          fail(ErrorCode::SchemaMismatch, path.string() + ": label vector length for node " + f[0]);
        std::vector<std::uint8_t> vec;
        for (const auto& b : bits) {
          const std::size_t x = detail::parse_index(b, path.string());
          if (x > 1) fail(ErrorCode::SchemaMismatch, path.string() + ": non-binary label entry");
          vec.push_back(static_cast<std::uint8_t>(x));
        }
        g.labels.multi[v] = std::move(vec);
      }
    }
  }

  {
    const auto path = dir / "splits.tsv";
    auto in = detail::open_required(path);
    std::vector<char> assigned(n, 0);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = detail::split_fields(line, '\t');
      if (f.size() != 2) fail(ErrorCode::SchemaMismatch, path.string() + ": expected two columns");
      const std::size_t v = detail::parse_index(f[0], path.string());
      if (v >= n) fail(ErrorCode::IndexOutOfRange, path.string() + ": node " + f[0]);
      if (assigned[v]) fail(ErrorCode::OverlappingSplits, "node " + f[0] + " appears in more than one split");
      assigned[v] = 1;
      if (f[1] == "train")
        g.splits.train.push_back(v);
      else if (f[1] == "val")
        g.splits.val.push_back(v);
      else if (f[1] == "test")
        g.splits.test.push_back(v);
      else
        fail(ErrorCode::SchemaMismatch, path.string() + ": unknown split '" + f[1] + "'");
    }
  }

  auto violations = validate(g);
  if (!violations.empty()) fail(ErrorCode::SchemaMismatch, violations.front());
  g.build_adjacency();
  return g;
}

inline void save_graph(const HetGraph& g, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  using nlohmann::json;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, dir.string() + ": " + ec.message());

  json meta;
  meta["node_types"] = json::array();
  for (std::size_t t = 0; t < g.node_types.size(); ++t)
    meta["node_types"].push_back({{"name", g.node_types[t]}, {"count", g.node_counts[t]}});
  meta["relations"] = json::array();
  for (const auto& r : g.relations) meta["relations"].push_back({{"name", r.name}, {"src", r.src}, {"dst", r.dst}});
  meta["target_type"] = g.target_type;
  meta["num_classes"] = g.labels.num_classes;
  meta["label_mode"] = g.labels.mode == LabelMode::single ? "single" : "multi";

  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) fail(ErrorCode::IoFailure, (dir / name).string());
    return out;
  };

  {
    auto out = open("meta.json");
    out << meta.dump(2) << '\n';
  }
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    auto out = open("edges_" + g.relations[r].name + ".tsv");
    for (const auto& e : g.edges[r]) out << e.src << '\t' << e.dst << '\n';
  }
  for (std::size_t t = 0; t < g.node_types.size(); ++t) {
    const auto path = dir / ("features_" + g.node_types[t] + ".bin");
    if (t < g.features.size() && g.features[t])
      detail::write_features(path, *g.features[t]);
    else
      fs::remove(path, ec);
  }
  {
    auto out = open("labels.tsv");
    for (std::size_t v = 0; v < g.labels.size(); ++v) {
      if (!g.labels.has(v)) continue;
      out << v << '\t';
      if (g.labels.mode == LabelMode::single) {
        out << g.labels.single[v];
      } else {
        const auto& m = g.labels.multi[v];
        for (std::size_t c = 0; c < m.size(); ++c) out << (c ? "," : "") << int(m[c]);
      }
      out << '\n';
    }
  }
  {
    auto out = open("splits.tsv");
    for (std::size_t v : g.splits.train) out << v << "\ttrain\n";
    for (std::size_t v : g.splits.val) out << v << "\tval\n";
    for (std::size_t v : g.splits.test) out << v << "\ttest\n";
    if (!out) fail(ErrorCode::IoFailure, (dir / "splits.tsv").string());
  }
}

}  // namespace heterseed
