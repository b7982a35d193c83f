#include "wsgat/extract.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include "wsgat/errors.hpp"
#include "wsgat/random.hpp"

namespace wsgat {

std::string to_string(ExtractionMethod m) {
  return m == ExtractionMethod::bfs ? "bfs" : "sliding_window";
}

ExtractionMethod extraction_method_from_string(const std::string& s) {
  if (s == "bfs") return ExtractionMethod::bfs;
  if (s == "sliding_window") return ExtractionMethod::sliding_window;
  throw ConfigError("method", "expected 'bfs' or 'sliding_window', got '" + s + "'");
}

std::size_t ExtractionConfig::effective_step() const noexcept {
  if (step_size > 0) return step_size;
  return std::max<std::size_t>(1, window_size / 2);
}

void ExtractionConfig::validate() const {
  if (window_size < 1) throw ConfigError("window_size", "must be >= 1");
  if (samples_per_graph < 1) throw ConfigError("samples_per_graph", "must be >= 1");
}

Subgraph induced_subgraph(const Graph& g, const FeatureMatrix& feats,
                          const std::vector<std::size_t>& nodes) {
  constexpr std::size_t absent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> local(g.num_nodes, absent);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] >= g.num_nodes) throw ContractError("induced_subgraph: node out of range");
    if (local[nodes[k]] != absent) throw ContractError("induced_subgraph: duplicate node");
    local[nodes[k]] = k;
  }

  Subgraph sub;
  sub.parent_id = g.id;
  sub.node_map = nodes;
  sub.label = g.label;
  for (const auto& e : g.edges) {
    if (local[e.src] != absent && local[e.dst] != absent) {
      sub.edges.push_back({local[e.src], local[e.dst]});
    }
  }
  std::sort(sub.edges.begin(), sub.edges.end());

  sub.features = FeatureMatrix(nodes.size(), feats.cols);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    std::copy_n(feats.data.begin() + static_cast<std::ptrdiff_t>(nodes[k] * feats.cols), feats.cols,
                sub.features.data.begin() + static_cast<std::ptrdiff_t>(k * feats.cols));
  }
  return sub;
}

Subgraph whole_graph_instance(const Graph& g, const FeatureMatrix& feats) {
  Subgraph sub;
  sub.parent_id = g.id;
  sub.node_map.resize(g.num_nodes);
  for (std::size_t n = 0; n < g.num_nodes; ++n) sub.node_map[n] = n;
  sub.edges = g.edges;
  sub.features = feats;
  sub.label = g.label;
  return sub;
}

std::vector<std::size_t> bfs_ball(const std::vector<std::vector<std::size_t>>& adj,
                                  std::size_t start, std::size_t depth_limit) {
  constexpr std::size_t unseen = static_cast<std::size_t>(-1);
  std::vector<std::size_t> depth(adj.size(), unseen);
  std::vector<std::size_t> order{start};
  depth[start] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::size_t u = order[head];
    if (depth[u] == depth_limit) continue;
    for (std::size_t v : adj[u]) {
      if (depth[v] == unseen) {
        depth[v] = depth[u] + 1;
        order.push_back(v);
      }
    }
  }
  return order;
}

std::mt19937_64 graph_rng(std::uint64_t seed, std::size_t graph_id) {
  return derived_rng({seed, graph_id});
}

namespace {

bool passes_thresholds(const Subgraph& s, const ExtractionConfig& cfg) {
  return s.num_nodes() >= cfg.min_nodes && s.num_undirected_edges() >= cfg.min_edges;
}

}  // namespace

std::vector<Subgraph> bfs_extract(const Graph& g, const FeatureMatrix& feats,
                                  const ExtractionConfig& cfg, std::mt19937_64& rng) {
  std::vector<Subgraph> out;
  if (g.num_nodes == 0) return out;
  const auto adj = adjacency_lists(g.num_nodes, g.edges);
  for (std::size_t attempt = 0; attempt < cfg.samples_per_graph; ++attempt) {
    const std::size_t start = uniform_index(rng, g.num_nodes);
    auto sub = induced_subgraph(g, feats, bfs_ball(adj, start, cfg.depth_limit));
    if (passes_thresholds(sub, cfg)) out.push_back(std::move(sub));
  }
  return out;
}

std::vector<WindowRange> window_ranges(std::size_t num_nodes, std::size_t window_size,
                                       std::size_t step_size) {
  std::vector<WindowRange> ranges;
  if (num_nodes == 0) return ranges;
  if (window_size >= num_nodes) return {{0, num_nodes}};
  // A step longer than the window skips nodes and may jump past the end.
  for (std::size_t begin = 0; begin < num_nodes; begin += step_size) {
    const std::size_t end = std::min(begin + window_size, num_nodes);
    ranges.push_back({begin, end});
    if (end == num_nodes) break;
  }
  return ranges;
}

std::vector<Subgraph> sliding_window_extract(const Graph& g, const FeatureMatrix& feats,
                                             const ExtractionConfig& cfg) {
  std::vector<Subgraph> out;
  for (const auto& r : window_ranges(g.num_nodes, cfg.window_size, cfg.effective_step())) {
    if (r.end - r.begin < cfg.min_nodes) continue;
    std::vector<std::size_t> nodes(r.end - r.begin);
    for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k] = r.begin + k;
    auto sub = induced_subgraph(g, feats, nodes);
    if (passes_thresholds(sub, cfg)) out.push_back(std::move(sub));
  }
  return out;
}

std::vector<Subgraph> extract(const Graph& g, const FeatureMatrix& feats, const ExtractionConfig& cfg) {
  if (cfg.method == ExtractionMethod::bfs) {
    auto rng = graph_rng(cfg.seed, g.id);
    return bfs_extract(g, feats, cfg, rng);
  }
  return sliding_window_extract(g, feats, cfg);
}

std::size_t window_size_from_fraction(const Dataset& ds, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("window_fraction", "must lie in (0, 1]");
  }
  const double nodes = std::floor(fraction * ds.mean_nodes + 0.5);
  return std::max<std::size_t>(1, static_cast<std::size_t>(nodes));
}

void write_subgraph_dump(const std::vector<Subgraph>& subgraphs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : subgraphs) {
    out << s.parent_id << ", " << s.label;
    for (std::size_t n : s.node_map) out << ", " << n;
    out << '\n';
  }
}

}  // namespace wsgat
