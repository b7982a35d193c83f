#include "wsgat/config.hpp"

#include <algorithm>
#include <fstream>

#include "wsgat/errors.hpp"

namespace wsgat {

using nlohmann::json;

std::string to_string(RunMode m) { return m == RunMode::subgraph ? "subgraph" : "baseline"; }

std::string to_string(SweepVariable v) {
  return v == SweepVariable::window_fraction ? "window_fraction" : "depth_limit";
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep.values", "must be nonempty");
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (!(values[k] > values[k - 1])) throw ConfigError("sweep.values", "must be strictly increasing");
  }
  if (repeats < 1) throw ConfigError("sweep.repeats", "must be >= 1");
  for (double v : values) {
    if (variable == SweepVariable::window_fraction && !(v > 0.0 && v <= 1.0)) {
      throw ConfigError("sweep.values", "window fractions must lie in (0, 1]");
    }
    if (variable == SweepVariable::depth_limit && (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))) {
      throw ConfigError("sweep.values", "depth limits must be nonnegative integers");
    }
  }
}

void RunConfig::validate() {
  if (dataset.name.empty()) throw ConfigError("dataset.name", "must be set");
  train.seed = seed;
  extraction.seed = seed;
  model.dropout_p = train.dropout_p;
  // A zero window size is resolved from window_fraction once the dataset is known.
  ExtractionConfig resolved = extraction;
  if (resolved.window_size == 0) resolved.window_size = 1;
  resolved.validate();
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw ConfigError("window_fraction", "must lie in (0, 1]");
  }
  train.validate();
  topk.validate();
  if (model.hidden_dim < 1) throw ConfigError("hidden_dim", "must be >= 1");
  if (model.num_heads < 1) throw ConfigError("num_heads", "must be >= 1");
  if (model.out_hidden < 1) throw ConfigError("out_hidden", "must be >= 1");
  if (!(model.leaky_slope > 0.0 && model.leaky_slope < 1.0)) throw ConfigError("leaky_slope", "must lie in (0, 1)");
  if (sweep) sweep->validate();
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.extraction.window_size = 0;
  return cfg;
}

namespace {

// Reads known keys from an object and rejects anything else.
class Section {
 public:
  Section(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "must be an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.emplace_back(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      target = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "wrong type");
    }
  }

  // Nonnegative integer field.
  void read_count(const char* key, std::size_t& target) {
    seen_.emplace_back(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_number_integer() || it->template get<long long>() < 0) {
      throw ConfigError(field(key), "must be a nonnegative integer");
    }
    target = it->template get<std::size_t>();
  }

  const json* child(const char* key) {
    seen_.emplace_back(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw ConfigError(field(key), "unknown key");
      }
    }
  }

  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string> seen_;
};

}  // namespace

RunConfig parse_run_config(const json& doc) {
  RunConfig cfg = default_run_config();
  Section root(doc, "");

  if (const json* d = root.child("dataset")) {
    Section s(*d, "dataset");
    std::string root_dir = cfg.dataset.root.string();
    s.read("name", cfg.dataset.name);
    s.read("root", root_dir);
    s.read_count("subset", cfg.dataset.subset);
    cfg.dataset.root = root_dir;
    s.reject_unknown();
  }

  std::string mode = to_string(cfg.mode);
  root.read("mode", mode);
  if (mode == "subgraph") {
    cfg.mode = RunMode::subgraph;
  } else if (mode == "baseline") {
    cfg.mode = RunMode::baseline;
  } else {
    throw ConfigError("mode", "expected 'subgraph' or 'baseline', got '" + mode + "'");
  }

  std::size_t seed = cfg.seed;
  root.read_count("seed", seed);
  cfg.seed = seed;
  std::string out_dir = cfg.out_dir.string();
  root.read("out", out_dir);
  cfg.out_dir = out_dir;
  root.read("log_test_accuracy", cfg.log_test_accuracy);
  root.read("dump_subgraphs", cfg.dump_subgraphs);

  if (const json* e = root.child("extraction")) {
    Section s(*e, "extraction");
    std::string method = to_string(cfg.extraction.method);
    s.read("method", method);
    cfg.extraction.method = extraction_method_from_string(method);
    s.read_count("depth_limit", cfg.extraction.depth_limit);
    s.read_count("samples_per_graph", cfg.extraction.samples_per_graph);
    s.read_count("min_nodes", cfg.extraction.min_nodes);
    s.read_count("min_edges", cfg.extraction.min_edges);
    s.read_count("window_size", cfg.extraction.window_size);
    s.read_count("step_size", cfg.extraction.step_size);
    s.read("window_fraction", cfg.window_fraction);
    s.reject_unknown();
  }

  if (const json* m = root.child("model")) {
    Section s(*m, "model");
    s.read_count("hidden_dim", cfg.model.hidden_dim);
    s.read_count("num_heads", cfg.model.num_heads);
    s.read_count("out_hidden", cfg.model.out_hidden);
    s.read("leaky_slope", cfg.model.leaky_slope);
    s.read("add_self_loops", cfg.model.add_self_loops);
    s.reject_unknown();
  }

  if (const json* t = root.child("train")) {
    Section s(*t, "train");
    s.read("lr", cfg.train.lr);
    s.read("weight_decay", cfg.train.weight_decay);
    s.read_count("epochs", cfg.train.epochs);
    s.read("dropout_p", cfg.train.dropout_p);
    s.read("split_fraction", cfg.train.split_fraction);
    s.read_count("batch", cfg.train.batch);
    s.read_count("workers", cfg.train.workers);
    s.read("resample_each_epoch", cfg.train.resample_each_epoch);
    s.reject_unknown();
  }

  if (const json* k = root.child("topk")) {
    Section s(*k, "topk");
    s.read_count("k", cfg.topk.k);
    std::string agg = to_string(cfg.topk.aggregation);
    s.read("aggregation", agg);
    cfg.topk.aggregation = aggregation_from_string(agg);
    s.reject_unknown();
  }

  if (const json* w = root.child("sweep")) {
    Section s(*w, "sweep");
    SweepSpec spec;
    std::string variable = to_string(spec.variable);
    s.read("variable", variable);
    if (variable == "window_fraction") {
      spec.variable = SweepVariable::window_fraction;
    } else if (variable == "depth_limit") {
      spec.variable = SweepVariable::depth_limit;
    } else {
      throw ConfigError("sweep.variable", "expected 'window_fraction' or 'depth_limit'");
    }
    s.read("values", spec.values);
    s.read_count("repeats", spec.repeats);
    s.reject_unknown();
    cfg.sweep = spec;
  }

  root.reject_unknown();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& cfg) {
  json j;
  j["dataset"] = {{"name", cfg.dataset.name}, {"root", cfg.dataset.root.string()}, {"subset", cfg.dataset.subset}};
  j["mode"] = to_string(cfg.mode);
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir.string();
  j["log_test_accuracy"] = cfg.log_test_accuracy;
  j["dump_subgraphs"] = cfg.dump_subgraphs;
  const auto& e = cfg.extraction;
  j["extraction"] = {{"method", to_string(e.method)},
                     {"depth_limit", e.depth_limit},
                     {"samples_per_graph", e.samples_per_graph},
                     {"min_nodes", e.min_nodes},
                     {"min_edges", e.min_edges},
                     {"window_size", e.window_size},
                     {"step_size", e.step_size},
                     {"window_fraction", cfg.window_fraction}};
  const auto& m = cfg.model;
  j["model"] = {{"hidden_dim", m.hidden_dim},
                {"num_heads", m.num_heads},
                {"out_hidden", m.out_hidden},
                {"leaky_slope", m.leaky_slope},
                {"add_self_loops", m.add_self_loops}};
  const auto& t = cfg.train;
  j["train"] = {{"lr", t.lr},
                {"weight_decay", t.weight_decay},
                {"epochs", t.epochs},
                {"dropout_p", t.dropout_p},
                {"split_fraction", t.split_fraction},
                {"batch", t.batch},
                {"workers", t.workers},
                {"resample_each_epoch", t.resample_each_epoch}};
  j["topk"] = {{"k", cfg.topk.k}, {"aggregation", to_string(cfg.topk.aggregation)}};
  if (cfg.sweep) {
    j["sweep"] = {{"variable", to_string(cfg.sweep->variable)},
                  {"values", cfg.sweep->values},
                  {"repeats", cfg.sweep->repeats}};
  }
  return j;
}

}  // namespace wsgat
