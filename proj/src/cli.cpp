#include "wsgat/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include "wsgat/config.hpp"
#include "wsgat/errors.hpp"
#include "wsgat/experiment.hpp"
#include "wsgat/fetch.hpp"
#include "wsgat/weaksup.hpp"

namespace wsgat {
namespace {

struct CommonOptions {
  std::string config_path;
  std::string dataset;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> subset;
  std::size_t parallel = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON run configuration");
  cmd->add_option("--dataset", opts.dataset, "TUDataset name (e.g. DD, MSRC_21)");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "master seed");
  cmd->add_option("--subset", opts.subset, "use a seeded sample of this many graphs");
}

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? default_run_config() : load_run_config(opts.config_path);
  if (!opts.dataset.empty()) cfg.dataset.name = opts.dataset;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.subset) cfg.dataset.subset = *opts.subset;
  if (const char* root = std::getenv("WSGAT_DATA_DIR"); root != nullptr && *root != '\0') {
    cfg.dataset.root = root;
  }
  cfg.validate();
  return cfg;
}

Dataset open_dataset(const RunConfig& cfg) {
  const auto dir = cfg.dataset.directory();
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("dataset", "directory " + dir.string() + " not found (run `wsgat fetch --dataset " +
                                     cfg.dataset.name + "` or set WSGAT_DATA_DIR)");
  }
  return load_dataset(cfg.dataset, cfg.seed);
}

int cmd_run(const CommonOptions& opts, std::optional<RunMode> force_mode, std::ostream& out) {
  RunConfig cfg = resolve_config(opts);
  if (force_mode) cfg.mode = *force_mode;
  const Dataset ds = open_dataset(cfg);
  const auto outcome = run_experiment(cfg, ds, &out);
  out << "accuracy " << outcome.accuracy << " on " << outcome.num_test_graphs << " test graphs ("
      << outcome.num_train_instances << " training instances); artifacts in " << cfg.out_dir.string() << '\n';
  return kExitOk;
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> values;
  std::stringstream ss(list);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError("sweep.values", "not a number: '" + token + "'");
    }
  }
  return values;
}

struct SweepOptions {
  std::string variable;
  std::string values;
  std::optional<std::size_t> repeats;
};

int cmd_sweep(const CommonOptions& opts, const SweepOptions& sweep_opts, std::ostream& out) {
  RunConfig cfg = resolve_config(opts);
  if (!sweep_opts.variable.empty() || !sweep_opts.values.empty()) {
    SweepSpec spec = cfg.sweep.value_or(SweepSpec{});
    if (!sweep_opts.variable.empty()) {
      if (sweep_opts.variable == "window_fraction") {
        spec.variable = SweepVariable::window_fraction;
      } else if (sweep_opts.variable == "depth_limit") {
        spec.variable = SweepVariable::depth_limit;
      } else {
        throw ConfigError("sweep.variable", "expected 'window_fraction' or 'depth_limit'");
      }
    }
    if (!sweep_opts.values.empty()) spec.values = parse_values(sweep_opts.values);
    cfg.sweep = spec;
  }
  if (sweep_opts.repeats) {
    if (!cfg.sweep) cfg.sweep = SweepSpec{};
    cfg.sweep->repeats = *sweep_opts.repeats;
  }
  if (!cfg.sweep) throw ConfigError("sweep", "give a sweep section in the config or --variable/--values");
  cfg.validate();
  const Dataset ds = open_dataset(cfg);
  const auto rows = run_sweep(cfg, ds, opts.parallel, &out);
  bool failed = false;
  out << "value,nodes_or_depth,accuracy_mean,accuracy_std\n";
  for (const auto& r : rows) {
    out << r.value << ',' << r.nodes_or_depth << ',' << r.accuracy_mean << ',' << r.accuracy_std << '\n';
    failed = failed || r.failed;
  }
  return failed ? kExitRuntime : kExitOk;
}

int cmd_export_topk(const CommonOptions& opts, const std::string& checkpoint, std::size_t graph_id, std::ostream& out) {
  RunConfig cfg = resolve_config(opts);
  const Dataset ds = open_dataset(cfg);
  if (graph_id >= ds.graphs.size()) {
    throw ConfigError("graph", "id " + std::to_string(graph_id) + " outside [0, " + std::to_string(ds.graphs.size()) + ")");
  }
  const GatModel model = load_checkpoint(checkpoint);
  if (model.config.in_dim != static_cast<std::size_t>(ds.num_node_labels)) {
    throw ConfigError("checkpoint", "model expects " + std::to_string(model.config.in_dim) +
                                        " node labels, dataset has " + std::to_string(ds.num_node_labels));
  }
  const Graph& g = ds.graphs[graph_id];
  const ExtractionConfig ext = resolve_extraction(cfg, ds);
  const auto subgraphs = extract(g, one_hot_features(g, ds.num_node_labels), ext);
  if (subgraphs.empty()) {
    out << "graph " << graph_id << ": extraction produced no subgraphs; nothing exported\n";
    return kExitOk;
  }
  std::vector<SubgraphScore> scores;
  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    auto p = predict(model, subgraphs[i]);
    scores.push_back({i, score_subgraph(p.attention), std::move(p.probs), std::move(p.logits)});
  }
  const auto top = select_top_k(scores, cfg.topk.k);
  std::vector<Subgraph> selected;
  for (const auto& s : top) selected.push_back(subgraphs[s.index]);
  const auto files = export_topk_dot(g, selected, cfg.out_dir, "graph_" + std::to_string(graph_id));
  const auto agg = aggregate_predictions(top, cfg.topk.aggregation);
  out << "graph " << graph_id << ": true " << g.label << ", predicted " << agg.predicted << '\n';
  for (std::size_t r = 0; r < top.size(); ++r) {
    out << "  rank " << (r + 1) << ": subgraph " << top[r].index << " score " << top[r].score << '\n';
  }
  for (const auto& f : files) out << "wrote " << f.string() << '\n';
  return kExitOk;
}

int cmd_fetch(const CommonOptions& opts, const std::string& base_url, std::ostream& out) {
  if (opts.dataset.empty()) throw ConfigError("dataset", "--dataset is required");
  RunConfig cfg = resolve_config(opts);
  const auto dir = fetch_tu_dataset(cfg.dataset.name, base_url, cfg.dataset.root);
  const Dataset ds = parse_tu_dataset(dir, cfg.dataset.name);
  out << "fetched " << ds.name << ": " << ds.graphs.size() << " graphs, " << ds.num_classes << " classes, "
      << ds.num_node_labels << " node labels, mean " << ds.mean_nodes << " nodes -> " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weakly-supervised graph classification with subgraph extraction and graph attention"};
  app.require_subcommand(1);

  CommonOptions opts;
  SweepOptions sweep_opts;
  std::string checkpoint;
  std::size_t graph_id = 0;
  std::string base_url = kDefaultDatasetBaseUrl;

  auto* run = app.add_subcommand("run", "extract subgraphs, train, evaluate with top-K aggregation");
  add_common(run, opts);
  auto* sweep = app.add_subcommand("sweep", "run one experiment per window fraction or depth limit");
  add_common(sweep, opts);
  sweep->add_option("--parallel", opts.parallel, "sweep points to run concurrently")->check(CLI::PositiveNumber);
  sweep->add_option("--variable", sweep_opts.variable, "window_fraction or depth_limit");
  sweep->add_option("--values", sweep_opts.values, "comma-separated, strictly increasing");
  sweep->add_option("--repeats", sweep_opts.repeats, "runs per point (seed, seed+1, ...)");
  auto* baseline = app.add_subcommand("baseline", "train and evaluate on whole graphs");
  add_common(baseline, opts);
  auto* export_topk = app.add_subcommand("export-topk", "write DOT files for a graph's top-K subgraphs");
  add_common(export_topk, opts);
  export_topk->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  export_topk->add_option("--graph", graph_id, "graph index")->required();
  auto* fetch = app.add_subcommand("fetch", "download and unpack a TUDataset archive");
  add_common(fetch, opts);
  fetch->add_option("--base-url", base_url, "archive base URL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(opts, std::nullopt, out);
    if (baseline->parsed()) return cmd_run(opts, RunMode::baseline, out);
    if (sweep->parsed()) return cmd_sweep(opts, sweep_opts, out);
    if (export_topk->parsed()) return cmd_export_topk(opts, checkpoint, graph_id, out);
    if (fetch->parsed()) return cmd_fetch(opts, base_url, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace wsgat
