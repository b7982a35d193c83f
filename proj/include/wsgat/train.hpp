#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "wsgat/autodiff.hpp"
#include "wsgat/extract.hpp"
#include "wsgat/graph.hpp"
#include "wsgat/model.hpp"

namespace wsgat {

struct TrainConfig {
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::size_t epochs = 100;
  double dropout_p = 0.6;
  double split_fraction = 0.8;
  std::uint64_t seed = 0;
  std::size_t batch = 32;
  std::size_t workers = 1;
  bool resample_each_epoch = false;  // BFS only: draw fresh subgraphs every epoch

  void validate() const;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros_like(std::span<const Matrix* const> params);
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_train_loss = 0.0;
  double subgraph_train_accuracy = 0.0;  // from the epoch's training-mode passes
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle of graph ids; the first ceil(fraction * N) go to training,
// clamped so both sides are nonempty.
Split split_dataset(const Dataset& ds, double fraction, std::uint64_t seed);

// -log softmax(logits)[label] for a (1 x C) logit row.
ad::Tensor cross_entropy(const ad::Tensor& logits, std::size_t label);

// One Adam update with L2 weight decay folded into the gradient
// (g += weight_decay * theta) for blocks with decay[b] set.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
               const std::vector<bool>& decay, AdamState& state, double lr, double weight_decay);

// Model overload: every block decays except the output bias.
void adam_step(GatModel& model, std::span<const Matrix> grads, AdamState& state, const TrainConfig& cfg);

// Extracted instances for the given parent graphs, in id order.
std::vector<Subgraph> make_instances(const Dataset& ds, std::span<const std::size_t> ids,
                                     const ExtractionConfig& ext);
std::vector<Subgraph> make_whole_graph_instances(const Dataset& ds, std::span<const std::size_t> ids);

using EpochCallback = std::function<void(EpochLog&, const GatModel&)>;
// Replaces the instance set before an epoch (epoch is 1-based).
using InstanceRefresh = std::function<void(std::size_t epoch, std::vector<Subgraph>&)>;

struct FitResult {
  GatModel model;
  std::vector<EpochLog> logs;
};

// Trains on fixed weakly-labelled instances: cross-entropy against each
// instance's inherited label, Adam per batch with batch-averaged gradients.
FitResult fit(std::vector<Subgraph> instances, GatConfig gat, const TrainConfig& tr,
              const EpochCallback& on_epoch = {}, const InstanceRefresh& refresh = {});

struct TrainResult {
  GatModel model;
  std::vector<EpochLog> logs;
  Split split;
  std::vector<std::size_t> training_parents;  // parent id of every training instance
};

// Split, extract from the training graphs, and fit.
TrainResult train(const Dataset& ds, const ExtractionConfig& ext, GatConfig gat, const TrainConfig& tr,
                  const EpochCallback& on_epoch = {});

// Same protocol with each whole training graph as one instance.
TrainResult train_whole_graphs(const Dataset& ds, GatConfig gat, const TrainConfig& tr,
                               const EpochCallback& on_epoch = {});

}  // namespace wsgat
