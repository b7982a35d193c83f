#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "wsgat/config.hpp"
#include "wsgat/graph.hpp"

namespace wsgat {

// Parses cfg.dataset and applies the optional seeded subset.
Dataset load_dataset(const DatasetSpec& spec, std::uint64_t seed);

// Extraction settings with the window size resolved against `ds`.
ExtractionConfig resolve_extraction(const RunConfig& cfg, const Dataset& ds);

struct RunOutcome {
  double accuracy = 0.0;
  std::size_t nodes_or_depth = 0;
  std::size_t num_train_instances = 0;
  std::size_t num_test_graphs = 0;
  std::vector<EpochLog> logs;
};

// Split, (extract,) train and evaluate according to cfg.mode. Writes
// manifest.json, run.csv, result.csv, model.ckpt and graphs.csv to
// cfg.out_dir. Epoch lines "epoch,loss,acc" go to `progress` when given.
RunOutcome run_experiment(const RunConfig& cfg, const Dataset& ds, std::ostream* progress);

struct SweepRow {
  double value = 0.0;
  std::size_t nodes_or_depth = 0;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // sample standard deviation over repeats; 0 for one repeat
  bool failed = false;
};

// One run per (value, repeat) under cfg.out_dir/point_<i>_rep_<r>, then
// sweep.csv and sweep_plot.csv in cfg.out_dir. Points that throw are
// recorded as NaN rows. `parallel` > 1 runs points concurrently.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, const Dataset& ds, std::size_t parallel,
                                std::ostream* progress);

}  // namespace wsgat
