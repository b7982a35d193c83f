#include "wsgat/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include "wsgat/errors.hpp"

namespace wsgat {
namespace {

struct Line {
  std::size_t number;  // 1-based
  std::string text;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Non-blank lines of a file, with their original line numbers.
std::vector<Line> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open required file " + path.string());
  std::vector<Line> lines;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (trim(text).empty()) continue;
    lines.push_back({number, std::move(text)});
  }
  return lines;
}

long long parse_int(std::string_view token, const std::filesystem::path& file, std::size_t line) {
  token = trim(token);
  long long value = 0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (token.empty() || ec != std::errc{} || ptr != end) {
    throw FormatError(file.filename().string(), line,
                      "expected an integer, got '" + std::string(token) + "'");
  }
  return value;
}

// Dense ids assigned in ascending order of the raw value.
std::map<long long, int> dense_remap(const std::vector<long long>& raw) {
  std::set<long long> distinct(raw.begin(), raw.end());
  std::map<long long, int> remap;
  int next = 0;
  for (long long v : distinct) remap.emplace(v, next++);
  return remap;
}

}  // namespace

void Graph::validate() const {
  if (node_labels.size() != num_nodes) {
    throw InvariantError("graph " + std::to_string(id) + ": node_labels size mismatch");
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.src >= num_nodes || e.dst >= num_nodes) {
      throw InvariantError("graph " + std::to_string(id) + ": edge endpoint out of range");
    }
    if (e.src == e.dst) throw InvariantError("graph " + std::to_string(id) + ": self-loop");
    if (k > 0 && !(edges[k - 1] < e)) {
      throw InvariantError("graph " + std::to_string(id) + ": edges unsorted or duplicated");
    }
    if (!std::binary_search(edges.begin(), edges.end(), Edge{e.dst, e.src})) {
      throw InvariantError("graph " + std::to_string(id) + ": edge list not symmetric");
    }
  }
}

std::size_t Dataset::total_nodes() const noexcept {
  std::size_t n = 0;
  for (const auto& g : graphs) n += g.num_nodes;
  return n;
}

Dataset parse_tu_dataset(const std::filesystem::path& dir, const std::string& name) {
  const auto file = [&](const char* suffix) { return dir / (name + suffix); };
  const auto adjacency_path = file("_A.txt");
  const auto indicator_path = file("_graph_indicator.txt");
  const auto graph_labels_path = file("_graph_labels.txt");
  const auto node_labels_path = file("_node_labels.txt");

  const auto indicator_lines = read_lines(indicator_path);
  const auto graph_label_lines = read_lines(graph_labels_path);
  const auto node_label_lines = read_lines(node_labels_path);
  const auto adjacency_lines = read_lines(adjacency_path);

  const std::size_t num_graphs = graph_label_lines.size();
  const std::size_t total_nodes = indicator_lines.size();
  if (num_graphs == 0) {
    throw FormatError(graph_labels_path.filename().string(), 1, "no graph labels");
  }

  // Node -> (graph, local index).
  std::vector<std::size_t> graph_of(total_nodes);
  std::vector<std::size_t> local_of(total_nodes);
  std::vector<std::size_t> nodes_in(num_graphs, 0);
  for (std::size_t n = 0; n < total_nodes; ++n) {
    const auto& ln = indicator_lines[n];
    const long long gid = parse_int(ln.text, indicator_path, ln.number);
    if (gid < 1 || static_cast<std::size_t>(gid) > num_graphs) {
      throw FormatError(indicator_path.filename().string(), ln.number,
                        "graph id " + std::to_string(gid) + " outside [1, " +
                            std::to_string(num_graphs) + "]");
    }
    graph_of[n] = static_cast<std::size_t>(gid - 1);
    local_of[n] = nodes_in[graph_of[n]]++;
  }

  if (node_label_lines.size() != total_nodes) {
    throw FormatError(node_labels_path.filename().string(), node_label_lines.empty() ? 1 : node_label_lines.back().number,
                      "expected " + std::to_string(total_nodes) + " node labels, found " +
                          std::to_string(node_label_lines.size()));
  }
  std::vector<long long> raw_node_labels(total_nodes);
  for (std::size_t n = 0; n < total_nodes; ++n) {
    raw_node_labels[n] = parse_int(node_label_lines[n].text, node_labels_path, node_label_lines[n].number);
  }
  std::vector<long long> raw_graph_labels(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    raw_graph_labels[g] = parse_int(graph_label_lines[g].text, graph_labels_path, graph_label_lines[g].number);
  }

  std::vector<std::vector<Edge>> directed(num_graphs);
  for (const auto& ln : adjacency_lines) {
    const std::string_view text(ln.text);
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) {
      throw FormatError(adjacency_path.filename().string(), ln.number, "expected 'i, j'");
    }
    const long long a = parse_int(text.substr(0, comma), adjacency_path, ln.number);
    const long long b = parse_int(text.substr(comma + 1), adjacency_path, ln.number);
    for (long long v : {a, b}) {
      if (v < 1 || static_cast<std::size_t>(v) > total_nodes) {
        throw FormatError(adjacency_path.filename().string(), ln.number,
                          "node " + std::to_string(v) + " outside [1, " + std::to_string(total_nodes) + "]");
      }
    }
    const auto u = static_cast<std::size_t>(a - 1);
    const auto v = static_cast<std::size_t>(b - 1);
    if (graph_of[u] != graph_of[v]) {
      throw FormatError(adjacency_path.filename().string(), ln.number,
                        "edge (" + std::to_string(a) + ", " + std::to_string(b) +
                            ") connects nodes of different graphs");
    }
    directed[graph_of[u]].push_back({local_of[u], local_of[v]});
  }

  Dataset ds;
  ds.name = name;
  const auto class_map = dense_remap(raw_graph_labels);
  const auto node_label_map = dense_remap(raw_node_labels);
  ds.num_classes = static_cast<int>(class_map.size());
  ds.num_node_labels = static_cast<int>(node_label_map.size());

  ds.graphs.resize(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    ds.graphs[g].id = g;
    ds.graphs[g].num_nodes = nodes_in[g];
    ds.graphs[g].label = class_map.at(raw_graph_labels[g]);
    ds.graphs[g].node_labels.reserve(nodes_in[g]);
  }
  for (std::size_t n = 0; n < total_nodes; ++n) {
    ds.graphs[graph_of[n]].node_labels.push_back(node_label_map.at(raw_node_labels[n]));
  }

  for (std::size_t g = 0; g < num_graphs; ++g) {
    auto& edges = directed[g];
    const auto before_loops = edges.size();
    std::erase_if(edges, [](const Edge& e) { return e.src == e.dst; });
    ds.stats.self_loops += before_loops - edges.size();

    std::sort(edges.begin(), edges.end());
    const auto before_dedup = edges.size();
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    ds.stats.duplicate_edges += before_dedup - edges.size();

    std::vector<Edge> missing;
    for (const auto& e : edges) {
      if (!std::binary_search(edges.begin(), edges.end(), Edge{e.dst, e.src})) {
        missing.push_back({e.dst, e.src});
      }
    }
    ds.stats.symmetrized_edges += missing.size();
    edges.insert(edges.end(), missing.begin(), missing.end());
    std::sort(edges.begin(), edges.end());
    ds.graphs[g].edges = std::move(edges);
  }

  ds.mean_nodes = static_cast<double>(total_nodes) / static_cast<double>(num_graphs);
  return ds;
}

void write_tu_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* suffix) {
    std::ofstream out(dir / (ds.name + suffix));
    if (!out) throw IoError("cannot write " + (dir / (ds.name + suffix)).string());
    return out;
  };
  auto adjacency = open("_A.txt");
  auto indicator = open("_graph_indicator.txt");
  auto graph_labels = open("_graph_labels.txt");
  auto node_labels = open("_node_labels.txt");

  std::size_t offset = 1;
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& graph = ds.graphs[g];
    graph_labels << graph.label << '\n';
    for (std::size_t n = 0; n < graph.num_nodes; ++n) {
      indicator << (g + 1) << '\n';
      node_labels << graph.node_labels[n] << '\n';
    }
    for (const auto& e : graph.edges) {
      adjacency << (e.src + offset) << ", " << (e.dst + offset) << '\n';
    }
    offset += graph.num_nodes;
  }
}

Dataset subset_dataset(const Dataset& ds, const std::vector<std::size_t>& ids) {
  Dataset out;
  out.name = ds.name;
  out.num_classes = ds.num_classes;
  out.num_node_labels = ds.num_node_labels;
  out.graphs.reserve(ids.size());
  for (std::size_t id : ids) {
    if (id >= ds.graphs.size()) throw ContractError("subset id " + std::to_string(id) + " out of range");
    Graph g = ds.graphs[id];
    g.id = out.graphs.size();
    out.graphs.push_back(std::move(g));
  }
  if (!out.graphs.empty()) {
    out.mean_nodes = static_cast<double>(out.total_nodes()) / static_cast<double>(out.graphs.size());
  }
  return out;
}

FeatureMatrix one_hot_features(const Graph& g, int num_node_labels) {
  if (num_node_labels <= 0) throw InvariantError("num_node_labels must be positive");
  FeatureMatrix f(g.num_nodes, static_cast<std::size_t>(num_node_labels));
  for (std::size_t n = 0; n < g.num_nodes; ++n) {
    const int label = g.node_labels[n];
    if (label < 0 || label >= num_node_labels) {
      throw InvariantError("graph " + std::to_string(g.id) + " node " + std::to_string(n) +
                           ": label " + std::to_string(label) + " outside [0, " +
                           std::to_string(num_node_labels) + ")");
    }
    f(n, static_cast<std::size_t>(label)) = 1.0;
  }
  return f;
}

std::vector<std::vector<std::size_t>> adjacency_lists(std::size_t num_nodes,
                                                      const std::vector<Edge>& edges) {
  std::vector<std::vector<std::size_t>> adj(num_nodes);
  for (const auto& e : edges) adj[e.src].push_back(e.dst);
  return adj;
}

}  // namespace wsgat
