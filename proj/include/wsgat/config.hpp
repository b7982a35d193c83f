#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsgat/extract.hpp"
#include "wsgat/model.hpp"
#include "wsgat/train.hpp"
#include "wsgat/weaksup.hpp"

namespace wsgat {

enum class RunMode { subgraph, baseline };

enum class SweepVariable { window_fraction, depth_limit };

std::string to_string(RunMode m);
std::string to_string(SweepVariable v);

struct SweepSpec {
  SweepVariable variable = SweepVariable::window_fraction;
  std::vector<double> values;
  std::size_t repeats = 1;

  void validate() const;
};

struct DatasetSpec {
  std::string name = "MSRC_21";
  std::filesystem::path root = "data";
  std::size_t subset = 0;  // 0 = all graphs; otherwise a seeded sample of this many

  std::filesystem::path directory() const { return root / name; }
};

struct RunConfig {
  DatasetSpec dataset;
  RunMode mode = RunMode::subgraph;
  std::uint64_t seed = 0;  // drives the split, initialization, dropout and BFS starts
  ExtractionConfig extraction;
  double window_fraction = 0.5;  // used when extraction.window_size is 0
  GatConfig model;
  TrainConfig train;
  TopKConfig topk;
  std::filesystem::path out_dir = "runs/latest";
  bool log_test_accuracy = true;
  bool dump_subgraphs = false;
  std::optional<SweepSpec> sweep;

  // Pushes `seed` into the sub-configs and checks every invariant.
  void validate();
};

// Defaults reproduce the training protocol; the window size is resolved
// against the dataset at run time.
RunConfig default_run_config();

// Parses the JSON config document. Unknown keys and bad values raise
// ConfigError naming the field.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// Fully resolved config, suitable for the run manifest.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace wsgat
