#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "wsgat/matrix.hpp"

namespace wsgat {

// Directed pair (source, target). Undirected edges are stored in both directions.
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Graph {
  std::size_t id = 0;
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;          // sorted, symmetric, no duplicates, no self-loops
  std::vector<int> node_labels;     // dense ids
  int label = 0;                    // dense class id

  // Undirected edge count (each pair is stored twice).
  std::size_t num_undirected_edges() const noexcept { return edges.size() / 2; }

  // Throws InvariantError if any Graph invariant is violated.
  void validate() const;

  friend bool operator==(const Graph&, const Graph&) = default;
};

struct ParseStats {
  std::size_t duplicate_edges = 0;    // repeated directed pairs dropped
  std::size_t symmetrized_edges = 0;  // reverse directions added for one-way pairs
  std::size_t self_loops = 0;         // (i, i) pairs dropped

  friend bool operator==(const ParseStats&, const ParseStats&) = default;
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  int num_classes = 0;
  int num_node_labels = 0;
  double mean_nodes = 0.0;
  ParseStats stats;

  std::size_t total_nodes() const noexcept;
};

// Parses `<dir>/<name>_{A,graph_indicator,graph_labels,node_labels}.txt`.
// Indices become 0-based, graph and node labels are densely remapped in
// ascending order of their raw value, and edge lists are symmetrized and
// deduplicated.
Dataset parse_tu_dataset(const std::filesystem::path& dir, const std::string& name);

// Writes the dataset back in TUDataset layout. Labels are written as the
// dense ids, so parse(write(ds)) reproduces `ds` exactly.
void write_tu_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Keeps the graphs at `ids` (in that order), renumbering them 0..n-1 and
// recomputing mean_nodes. Class and node-label counts are inherited from the
// parent so models and features stay compatible.
Dataset subset_dataset(const Dataset& ds, const std::vector<std::size_t>& ids);

FeatureMatrix one_hot_features(const Graph& g, int num_node_labels);

// Neighbor lists built from a symmetric edge list.
std::vector<std::vector<std::size_t>> adjacency_lists(std::size_t num_nodes,
                                                      const std::vector<Edge>& edges);

}  // namespace wsgat
