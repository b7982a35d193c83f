#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "wsgat/graph.hpp"

namespace wsgat {

// Small labelled corpus for smoke tests and demos. Each graph is a path over
// its node indices plus short-range chords; node labels lean towards a
// class-specific pair of labels, with `label_noise` of them drawn uniformly.
struct ToyCorpusSpec {
  std::string name = "TOY";
  std::size_t num_graphs = 10;
  std::size_t min_nodes = 12;
  std::size_t max_nodes = 24;
  int num_classes = 2;
  int num_node_labels = 4;
  double label_noise = 0.2;
  double chord_prob = 0.3;
  std::uint64_t seed = 1;
};

Dataset make_toy_dataset(const ToyCorpusSpec& spec);

}  // namespace wsgat
