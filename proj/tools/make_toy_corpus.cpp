// Writes a small synthetic corpus in TUDataset layout, for trying the CLI
// without downloading anything:
//
//   make_toy_corpus --out data --name TOY --graphs 40
//   WSGAT_DATA_DIR=data wsgat run --dataset TOY --out runs/toy

#include <CLI11.hpp>

#include <iostream>

#include "wsgat/graph.hpp"
#include "wsgat/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic TUDataset-format corpus"};
  wsgat::ToyCorpusSpec spec;
  std::string out = "data";
  app.add_option("--out", out, "dataset root; files go to <out>/<name>/");
  app.add_option("--name", spec.name, "dataset name");
  app.add_option("--graphs", spec.num_graphs, "number of graphs");
  app.add_option("--min-nodes", spec.min_nodes);
  app.add_option("--max-nodes", spec.max_nodes);
  app.add_option("--classes", spec.num_classes);
  app.add_option("--node-labels", spec.num_node_labels);
  app.add_option("--noise", spec.label_noise, "fraction of node labels drawn uniformly");
  app.add_option("--seed", spec.seed);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto ds = wsgat::make_toy_dataset(spec);
    wsgat::write_tu_dataset(ds, std::filesystem::path(out) / spec.name);
    std::cout << "wrote " << ds.graphs.size() << " graphs to " << (std::filesystem::path(out) / spec.name).string()
              << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
