#include "wsgat/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "wsgat/errors.hpp"
#include "wsgat/random.hpp"
#include "wsgat/train.hpp"
#include "wsgat/weaksup.hpp"

namespace wsgat {

Dataset load_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Dataset ds = parse_tu_dataset(spec.directory(), spec.name);
  if (spec.subset == 0 || spec.subset >= ds.graphs.size()) return ds;
  std::vector<std::size_t> ids(ds.graphs.size());
  for (std::size_t k = 0; k < ids.size(); ++k) ids[k] = k;
  auto rng = derived_rng({seed, 0x737562736574u});
  shuffle(ids, rng);
  ids.resize(spec.subset);
  std::sort(ids.begin(), ids.end());
  return subset_dataset(ds, ids);
}

ExtractionConfig resolve_extraction(const RunConfig& cfg, const Dataset& ds) {
  ExtractionConfig ext = cfg.extraction;
  ext.seed = cfg.seed;
  if (ext.window_size == 0) ext.window_size = window_size_from_fraction(ds, cfg.window_fraction);
  ext.validate();
  return ext;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_manifest(const RunConfig& cfg, const ExtractionConfig& ext, const GatConfig& gat, const Dataset& ds) {
  nlohmann::json m;
  m["config"] = to_json(cfg);
  m["resolved"] = {{"window_size", ext.window_size},
                   {"step_size", ext.effective_step()},
                   {"extraction_seed", ext.seed},
                   {"train_seed", cfg.seed},
                   {"in_dim", gat.in_dim},
                   {"num_classes", gat.num_classes}};
  m["dataset"] = {{"name", ds.name},
                  {"graphs", ds.graphs.size()},
                  {"num_classes", ds.num_classes},
                  {"num_node_labels", ds.num_node_labels},
                  {"mean_nodes", ds.mean_nodes}};
  auto out = open_out(cfg.out_dir / "manifest.json");
  out << m.dump(2) << '\n';
}

}  // namespace

RunOutcome run_experiment(const RunConfig& cfg, const Dataset& ds, std::ostream* progress) {
  if (ds.graphs.size() < 2) throw ConfigError("dataset", "need at least 2 graphs");
  const bool baseline = cfg.mode == RunMode::baseline;
  const ExtractionConfig ext = resolve_extraction(cfg, ds);

  GatConfig gat = cfg.model;
  gat.in_dim = static_cast<std::size_t>(ds.num_node_labels);
  gat.num_classes = static_cast<std::size_t>(ds.num_classes);
  gat.dropout_p = cfg.train.dropout_p;
  TrainConfig tr = cfg.train;
  tr.seed = cfg.seed;

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());
  write_manifest(cfg, ext, gat, ds);

  // The split is a pure function of (dataset, fraction, seed); computing it
  // here lets the epoch hook evaluate on the same test graphs train() holds out.
  const Split split = split_dataset(ds, tr.split_fraction, tr.seed);
  std::vector<EvalGraph> test_graphs;
  if (!baseline) test_graphs = prepare_eval(ds, split.test, ext);

  auto run_csv = open_out(cfg.out_dir / "run.csv");
  run_csv << "epoch,loss,acc,test_acc\n";
  const EpochCallback on_epoch = [&](EpochLog& log, const GatModel& model) {
    if (cfg.log_test_accuracy) {
      log.test_accuracy = baseline ? evaluate_whole_graphs(model, ds, split.test).accuracy
                                   : evaluate([&model](const Subgraph& s) { return predict(model, s); },
                                              test_graphs, cfg.topk)
                                         .accuracy;
    }
    run_csv << log.epoch << ',' << log.mean_train_loss << ',' << log.subgraph_train_accuracy << ','
            << log.test_accuracy << '\n';
    if (progress) {
      *progress << log.epoch << ',' << log.mean_train_loss << ',' << log.subgraph_train_accuracy << '\n';
    }
  };

  TrainResult trained = baseline ? train_whole_graphs(ds, gat, tr, on_epoch) : train(ds, ext, gat, tr, on_epoch);
  run_csv.close();

  if (cfg.dump_subgraphs && !baseline) {
    write_subgraph_dump(make_instances(ds, trained.split.train, ext), cfg.out_dir / "subgraphs.txt");
  }
  save_checkpoint(trained.model, cfg.out_dir / "model.ckpt");

  const EvalResult eval =
      baseline ? evaluate_whole_graphs(trained.model, ds, trained.split.test)
               : evaluate([&trained](const Subgraph& s) { return predict(trained.model, s); }, test_graphs, cfg.topk);
  write_eval_records(eval.records, cfg.out_dir / "graphs.csv");

  RunOutcome outcome;
  outcome.accuracy = eval.accuracy;
  outcome.nodes_or_depth = ext.method == ExtractionMethod::bfs ? ext.depth_limit : ext.window_size;
  outcome.num_train_instances = trained.training_parents.size();
  outcome.num_test_graphs = trained.split.test.size();
  outcome.logs = std::move(trained.logs);

  std::string method = "whole_graph";
  std::ostringstream parameter;
  parameter << std::setprecision(17);
  std::string nodes_or_depth;
  if (!baseline) {
    method = to_string(ext.method);
    if (ext.method == ExtractionMethod::bfs) {
      parameter << ext.depth_limit;
    } else {
      parameter << cfg.window_fraction;
    }
    nodes_or_depth = std::to_string(outcome.nodes_or_depth);
  }
  auto result = open_out(cfg.out_dir / "result.csv");
  result << "dataset,mode,method,parameter,nodes_or_depth,accuracy,num_test_graphs,num_train_instances\n";
  result << ds.name << ',' << to_string(cfg.mode) << ',' << method << ',' << parameter.str() << ','
         << nodes_or_depth << ',' << outcome.accuracy << ',' << outcome.num_test_graphs << ','
         << outcome.num_train_instances << '\n';
  return outcome;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const Dataset& ds, std::size_t parallel,
                                std::ostream* progress) {
  if (!cfg.sweep) throw ConfigError("sweep", "no sweep section");
  const SweepSpec& spec = *cfg.sweep;
  spec.validate();

  struct Job {
    std::size_t point;
    std::size_t repeat;
    RunConfig cfg;
  };
  std::vector<Job> jobs;
  std::vector<SweepRow> rows(spec.values.size());
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    RunConfig point = cfg;
    point.sweep.reset();
    const double value = spec.values[i];
    if (spec.variable == SweepVariable::window_fraction) {
      point.extraction.method = ExtractionMethod::sliding_window;
      point.extraction.window_size = 0;
      point.extraction.step_size = cfg.extraction.step_size;
      point.window_fraction = value;
    } else {
      point.extraction.method = ExtractionMethod::bfs;
      point.extraction.depth_limit = static_cast<std::size_t>(value);
    }
    rows[i].value = value;
    const ExtractionConfig resolved = resolve_extraction(point, ds);
    rows[i].nodes_or_depth =
        resolved.method == ExtractionMethod::bfs ? resolved.depth_limit : resolved.window_size;
    for (std::size_t r = 0; r < spec.repeats; ++r) {
      RunConfig job = point;
      job.seed = cfg.seed + r;
      job.out_dir = cfg.out_dir / ("point_" + std::to_string(i) + "_rep_" + std::to_string(r));
      job.validate();
      jobs.push_back({i, r, std::move(job)});
    }
  }

  std::vector<double> accuracy(jobs.size(), std::numeric_limits<double>::quiet_NaN());
  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        accuracy[j] = run_experiment(jobs[j].cfg, ds, nullptr).accuracy;
      } catch (const std::exception& e) {
        std::lock_guard lock(io_mutex);
        std::cerr << "sweep point " << spec.values[jobs[j].point] << " repeat " << jobs[j].repeat
                  << " failed: " << e.what() << '\n';
      }
      if (progress) {
        std::lock_guard lock(io_mutex);
        *progress << "sweep " << to_string(spec.variable) << '=' << spec.values[jobs[j].point] << " repeat "
                  << jobs[j].repeat << " accuracy=" << accuracy[j] << '\n';
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(parallel, 1, jobs.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> acc;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].point == i) acc.push_back(accuracy[j]);
    }
    const bool failed = std::any_of(acc.begin(), acc.end(), [](double a) { return std::isnan(a); });
    rows[i].failed = failed;
    if (failed) {
      rows[i].accuracy_mean = rows[i].accuracy_std = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= static_cast<double>(acc.size());
    double var = 0.0;
    for (double a : acc) var += (a - mean) * (a - mean);
    rows[i].accuracy_mean = mean;
    rows[i].accuracy_std = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
  }

  auto sweep_csv = open_out(cfg.out_dir / "sweep.csv");
  sweep_csv << "value,nodes_or_depth,accuracy_mean,accuracy_std\n";
  auto plot_csv = open_out(cfg.out_dir / "sweep_plot.csv");
  plot_csv << "variable,x,accuracy,lower,upper\n";
  for (const auto& r : rows) {
    sweep_csv << r.value << ',' << r.nodes_or_depth << ',' << r.accuracy_mean << ',' << r.accuracy_std << '\n';
    plot_csv << to_string(spec.variable) << ',' << r.value << ',' << r.accuracy_mean << ','
             << r.accuracy_mean - r.accuracy_std << ',' << r.accuracy_mean + r.accuracy_std << '\n';
  }
  return rows;
}

}  // namespace wsgat
