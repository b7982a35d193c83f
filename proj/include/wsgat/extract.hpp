#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wsgat/graph.hpp"

namespace wsgat {

enum class ExtractionMethod { bfs, sliding_window };

std::string to_string(ExtractionMethod m);
ExtractionMethod extraction_method_from_string(const std::string& s);

struct ExtractionConfig {
  ExtractionMethod method = ExtractionMethod::sliding_window;
  std::size_t depth_limit = 11;
  std::size_t samples_per_graph = 5;
  std::size_t min_nodes = 5;
  std::size_t min_edges = 4;   // undirected edge count
  std::size_t window_size = 1;
  std::size_t step_size = 0;   // 0 means window_size / 2 (at least 1)
  std::uint64_t seed = 0;

  std::size_t effective_step() const noexcept;
  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

// Induced subgraph of a parent graph. Edges use the new (local) indices;
// `node_map[local]` is the parent index.
struct Subgraph {
  std::size_t parent_id = 0;
  std::vector<std::size_t> node_map;
  std::vector<Edge> edges;
  FeatureMatrix features;
  int label = 0;

  std::size_t num_nodes() const noexcept { return node_map.size(); }
  std::size_t num_undirected_edges() const noexcept { return edges.size() / 2; }
};

// Induced subgraph on `nodes` (kept in the given order), inheriting g's label.
Subgraph induced_subgraph(const Graph& g, const FeatureMatrix& feats,
                          const std::vector<std::size_t>& nodes);

// The whole graph as a single instance.
Subgraph whole_graph_instance(const Graph& g, const FeatureMatrix& feats);

// Nodes within `depth_limit` hops of `start`, in BFS discovery order.
std::vector<std::size_t> bfs_ball(const std::vector<std::vector<std::size_t>>& adj,
                                  std::size_t start, std::size_t depth_limit);

// Per-graph stream seeded by (seed, graph id); serial and parallel runs agree.
std::mt19937_64 graph_rng(std::uint64_t seed, std::size_t graph_id);

std::vector<Subgraph> bfs_extract(const Graph& g, const FeatureMatrix& feats,
                                  const ExtractionConfig& cfg, std::mt19937_64& rng);

std::vector<Subgraph> sliding_window_extract(const Graph& g, const FeatureMatrix& feats,
                                             const ExtractionConfig& cfg);

// Node-index ranges [begin, end) the sliding window visits, before filtering.
struct WindowRange {
  std::size_t begin;
  std::size_t end;
};
std::vector<WindowRange> window_ranges(std::size_t num_nodes, std::size_t window_size,
                                       std::size_t step_size);

// Dispatches on cfg.method; BFS uses graph_rng(cfg.seed, g.id).
std::vector<Subgraph> extract(const Graph& g, const FeatureMatrix& feats, const ExtractionConfig& cfg);

// round_half_up(fraction * ds.mean_nodes), at least 1.
std::size_t window_size_from_fraction(const Dataset& ds, double fraction);

// Audit dump: one line per subgraph, "parent_id, label, n0, n1, ...".
void write_subgraph_dump(const std::vector<Subgraph>& subgraphs, const std::filesystem::path& path);

}  // namespace wsgat
