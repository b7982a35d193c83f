#include "wsgat/synthetic.hpp"

#include <algorithm>

#include "wsgat/errors.hpp"
#include "wsgat/random.hpp"

namespace wsgat {

Dataset make_toy_dataset(const ToyCorpusSpec& spec) {
  if (spec.num_graphs < 1 || spec.min_nodes < 2 || spec.max_nodes < spec.min_nodes || spec.num_classes < 1 ||
      spec.num_node_labels < 1) {
    throw ConfigError("toy_corpus", "invalid corpus shape");
  }
  auto rng = derived_rng({spec.seed, 0x746f79u});
  Dataset ds;
  ds.name = spec.name;
  ds.num_classes = spec.num_classes;
  ds.num_node_labels = spec.num_node_labels;
  for (std::size_t gi = 0; gi < spec.num_graphs; ++gi) {
    Graph g;
    g.id = gi;
    g.label = static_cast<int>(gi % static_cast<std::size_t>(spec.num_classes));
    g.num_nodes = spec.min_nodes + uniform_index(rng, spec.max_nodes - spec.min_nodes + 1);
    for (std::size_t n = 0; n < g.num_nodes; ++n) {
      int label = 0;
      if (uniform01(rng) < spec.label_noise) {
        label = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.num_node_labels)));
      } else {
        label = (2 * g.label + static_cast<int>(uniform_index(rng, 2))) % spec.num_node_labels;
      }
      g.node_labels.push_back(label);
    }
    for (std::size_t n = 0; n + 1 < g.num_nodes; ++n) {
      g.edges.push_back({n, n + 1});
      g.edges.push_back({n + 1, n});
      for (std::size_t hop = 2; hop <= 3 && n + hop < g.num_nodes; ++hop) {
        if (uniform01(rng) < spec.chord_prob) {
          g.edges.push_back({n, n + hop});
          g.edges.push_back({n + hop, n});
        }
      }
    }
    std::sort(g.edges.begin(), g.edges.end());
    ds.graphs.push_back(std::move(g));
  }
  // Dense remapping as the parser would see it: only labels that occur count.
  std::vector<bool> used(static_cast<std::size_t>(spec.num_node_labels), false);
  for (const auto& g : ds.graphs)
    for (int l : g.node_labels) used[static_cast<std::size_t>(l)] = true;
  if (std::find(used.begin(), used.end(), false) != used.end()) {
    std::vector<int> remap(used.size(), -1);
    int next = 0;
    for (std::size_t l = 0; l < used.size(); ++l)
      if (used[l]) remap[l] = next++;
    for (auto& g : ds.graphs)
      for (int& l : g.node_labels) l = remap[static_cast<std::size_t>(l)];
    ds.num_node_labels = next;
  }
  ds.mean_nodes = static_cast<double>(ds.total_nodes()) / static_cast<double>(ds.graphs.size());
  return ds;
}

}  // namespace wsgat
