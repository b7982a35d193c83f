#include "wsgat/train.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "wsgat/errors.hpp"
#include "wsgat/random.hpp"

namespace wsgat {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr", "must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be >= 0");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p", "must lie in [0, 1)");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split_fraction", "must lie in (0, 1)");
  if (batch < 1) throw ConfigError("batch", "must be >= 1");
  if (workers < 1) throw ConfigError("workers", "must be >= 1");
}

AdamState AdamState::zeros_like(std::span<const Matrix* const> params) {
  AdamState s;
  for (const Matrix* p : params) {
    s.m.emplace_back(p->rows, p->cols);
    s.v.emplace_back(p->rows, p->cols);
  }
  return s;
}

Split split_dataset(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split_fraction", "must lie in (0, 1)");
  const std::size_t n = ds.graphs.size();
  if (n < 2) throw ContractError("split_dataset: need at least 2 graphs, have " + std::to_string(n));
  std::vector<std::size_t> ids(n);
  for (std::size_t k = 0; k < n; ++k) ids[k] = k;
  auto rng = derived_rng({seed, 0x73706c6974u});
  shuffle(ids, rng);
  auto n_train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Split s;
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  return s;
}

ad::Tensor cross_entropy(const ad::Tensor& logits, std::size_t label) {
  if (logits.rows() != 1) throw ShapeError("cross_entropy: expected a single logit row, got " + logits.value().shape_string());
  if (label >= logits.cols()) {
    throw ContractError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                        std::to_string(logits.cols()) + ")");
  }
  return ad::scale(ad::pick(ad::log_softmax_rows(logits), 0, label), -1.0);
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
               const std::vector<bool>& decay, AdamState& state, double lr, double weight_decay) {
  if (grads.size() != params.size() || decay.size() != params.size()) {
    throw ContractError("adam_step: parameter, gradient and decay lists differ in length");
  }
  if (state.m.empty()) {
    state = AdamState::zeros_like(std::span<const Matrix* const>(params.data(), params.size()));
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    Matrix& theta = *params[b];
    const Matrix& g = grads[b];
    if (!g.same_shape(theta)) throw ShapeError("adam_step: gradient shape mismatch for block " + std::to_string(b));
    Matrix& m = state.m[b];
    Matrix& v = state.v[b];
    const double wd = decay[b] ? weight_decay : 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double gk = g.data[k] + wd * theta.data[k];
      m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * gk;
      v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * gk * gk;
      const double m_hat = m.data[k] / bias1;
      const double v_hat = v.data[k] / bias2;
      theta.data[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void adam_step(GatModel& model, std::span<const Matrix> grads, AdamState& state, const TrainConfig& cfg) {
  auto params = model.parameters();
  std::vector<bool> decay(params.size());
  for (std::size_t b = 0; b < params.size(); ++b) decay[b] = GatModel::decays(b, params.size());
  adam_step(params, grads, decay, state, cfg.lr, cfg.weight_decay);
}

std::vector<Subgraph> make_instances(const Dataset& ds, std::span<const std::size_t> ids,
                                     const ExtractionConfig& ext) {
  std::vector<Subgraph> out;
  for (std::size_t id : ids) {
    const Graph& g = ds.graphs.at(id);
    auto subs = extract(g, one_hot_features(g, ds.num_node_labels), ext);
    std::move(subs.begin(), subs.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<Subgraph> make_whole_graph_instances(const Dataset& ds, std::span<const std::size_t> ids) {
  std::vector<Subgraph> out;
  for (std::size_t id : ids) {
    const Graph& g = ds.graphs.at(id);
    if (g.num_nodes == 0) continue;
    out.push_back(whole_graph_instance(g, one_hot_features(g, ds.num_node_labels)));
  }
  return out;
}

namespace {

struct InstanceOutcome {
  std::vector<Matrix> grads;
  double loss = 0.0;
  bool correct = false;
};

InstanceOutcome run_instance(const GatModel& model, const Subgraph& sub, std::mt19937_64 rng) {
  ad::Tape tape;
  const auto params = bind_params(tape, model, true);
  auto fr = forward(tape, params, model.config, sub, Mode::train, rng);
  const auto label = static_cast<std::size_t>(sub.label);
  const ad::Tensor loss = cross_entropy(fr.logits, label);
  tape.backward(loss);
  InstanceOutcome out;
  out.grads = collect_gradients(params);
  out.loss = loss.value().data[0];
  const auto& p = fr.probs.data;
  out.correct = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == label;
  return out;
}

}  // namespace

FitResult fit(std::vector<Subgraph> instances, GatConfig gat, const TrainConfig& tr,
              const EpochCallback& on_epoch, const InstanceRefresh& refresh) {
  tr.validate();
  gat.dropout_p = tr.dropout_p;
  gat.validate();

  FitResult result{init_params(gat, tr.seed), {}};
  GatModel& model = result.model;
  AdamState adam;

  for (std::size_t epoch = 1; epoch <= tr.epochs; ++epoch) {
    if (refresh) refresh(epoch, instances);
    if (instances.empty()) throw TrainingError("no training instances at epoch " + std::to_string(epoch));

    std::vector<std::size_t> order(instances.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    auto shuffle_rng = derived_rng({tr.seed, 0x65706f6368u, epoch});
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += tr.batch) {
      const std::size_t count = std::min(tr.batch, order.size() - start);
      std::vector<InstanceOutcome> outcomes(count);
      const auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          const std::size_t idx = order[start + j];
          outcomes[j] = run_instance(model, instances[idx], derived_rng({tr.seed, epoch, idx}));
        }
      };
      const std::size_t workers = std::min(tr.workers, count);
      if (workers <= 1) {
        work(0, count);
      } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (count + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
          const std::size_t b = w * chunk;
          const std::size_t e = std::min(count, b + chunk);
          if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& t : pool) t.join();
      }

      // Fixed-order reduction keeps results independent of the worker count.
      std::vector<Matrix> grads = std::move(outcomes[0].grads);
      for (std::size_t j = 0; j < count; ++j) {
        const auto& o = outcomes[j];
        if (!std::isfinite(o.loss)) {
          const auto& sub = instances[order[start + j]];
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " on an instance of graph " +
                              std::to_string(sub.parent_id) + " (" + std::to_string(sub.num_nodes()) + " nodes)");
        }
        loss_sum += o.loss;
        correct += o.correct ? 1 : 0;
        if (j == 0) continue;
        for (std::size_t b = 0; b < grads.size(); ++b) {
          for (std::size_t k = 0; k < grads[b].size(); ++k) grads[b].data[k] += o.grads[b].data[k];
        }
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (auto& g : grads)
        for (double& v : g.data) v *= inv;
      adam_step(model, grads, adam, tr);
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_train_loss = loss_sum / static_cast<double>(instances.size());
    log.subgraph_train_accuracy = static_cast<double>(correct) / static_cast<double>(instances.size());
    if (on_epoch) on_epoch(log, model);
    result.logs.push_back(log);
  }
  return result;
}

namespace {

std::vector<std::size_t> parents_of(const std::vector<Subgraph>& instances) {
  std::vector<std::size_t> p;
  p.reserve(instances.size());
  for (const auto& s : instances) p.push_back(s.parent_id);
  return p;
}

}  // namespace

TrainResult train(const Dataset& ds, const ExtractionConfig& ext, GatConfig gat, const TrainConfig& tr,
                  const EpochCallback& on_epoch) {
  ext.validate();
  TrainResult result;
  result.split = split_dataset(ds, tr.split_fraction, tr.seed);
  auto instances = make_instances(ds, result.split.train, ext);
  if (instances.empty()) {
    throw ConfigError("extraction", "no training subgraphs survive min_nodes=" + std::to_string(ext.min_nodes) +
                                        " / min_edges=" + std::to_string(ext.min_edges) +
                                        "; lower the thresholds or enlarge the window/depth");
  }
  result.training_parents = parents_of(instances);

  InstanceRefresh refresh;
  if (tr.resample_each_epoch && ext.method == ExtractionMethod::bfs) {
    refresh = [&ds, &ext, &result](std::size_t epoch, std::vector<Subgraph>& inst) {
      if (epoch == 1) return;
      ExtractionConfig fresh = ext;
      fresh.seed = ext.seed + epoch - 1;
      inst = make_instances(ds, result.split.train, fresh);
      const auto parents = parents_of(inst);
      result.training_parents.insert(result.training_parents.end(), parents.begin(), parents.end());
    };
  }
  auto fitted = fit(std::move(instances), gat, tr, on_epoch, refresh);
  result.model = std::move(fitted.model);
  result.logs = std::move(fitted.logs);
  return result;
}

TrainResult train_whole_graphs(const Dataset& ds, GatConfig gat, const TrainConfig& tr,
                               const EpochCallback& on_epoch) {
  TrainResult result;
  result.split = split_dataset(ds, tr.split_fraction, tr.seed);
  auto instances = make_whole_graph_instances(ds, result.split.train);
  if (instances.empty()) throw ConfigError("dataset", "no nonempty training graphs");
  result.training_parents = parents_of(instances);
  auto fitted = fit(std::move(instances), gat, tr, on_epoch);
  result.model = std::move(fitted.model);
  result.logs = std::move(fitted.logs);
  return result;
}

}  // namespace wsgat
