#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "../support/oracles.hpp"
#include "wsgat/errors.hpp"
#include "wsgat/synthetic.hpp"
#include "wsgat/train.hpp"

using namespace wsgat;
using wsgat::testing::random_matrix;

namespace {

Dataset numbered_dataset(std::size_t n) {
  Dataset ds;
  ds.graphs.resize(n);
  for (std::size_t k = 0; k < n; ++k) ds.graphs[k].id = k;
  return ds;
}

double cross_entropy_value(const Matrix& logits, std::size_t label) {
  ad::Tape tape;
  return cross_entropy(tape.leaf(logits), label).value()(0, 0);
}

Dataset toy_set() {
  ToyCorpusSpec spec;
  spec.num_graphs = 10;
  return make_toy_dataset(spec);
}

ExtractionConfig toy_extraction(const Dataset& ds) {
  ExtractionConfig ext;
  ext.window_size = window_size_from_fraction(ds, 0.5);
  ext.min_nodes = 5;
  ext.min_edges = 4;
  return ext;
}

GatConfig toy_gat(const Dataset& ds) {
  GatConfig gat;
  gat.in_dim = static_cast<std::size_t>(ds.num_node_labels);
  gat.num_classes = static_cast<std::size_t>(ds.num_classes);
  return gat;
}

}  // namespace

TEST(SplitDataset, SizesDisjointAndSeeded) {
  const Dataset ds = numbered_dataset(10);
  const Split s = split_dataset(ds, 0.8, 42);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.test.size(), 2u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (std::size_t t : s.test) EXPECT_TRUE(all.insert(t).second);
  EXPECT_EQ(all.size(), 10u);

  const Split again = split_dataset(ds, 0.8, 42);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.test, s.test);
}

TEST(SplitDataset, CeilingAndClamp) {
  EXPECT_EQ(split_dataset(numbered_dataset(7), 0.8, 1).train.size(), 6u);  // ceil(5.6)
  EXPECT_EQ(split_dataset(numbered_dataset(2), 0.8, 1).train.size(), 1u);
  EXPECT_EQ(split_dataset(numbered_dataset(5), 0.01, 1).train.size(), 1u);
  EXPECT_THROW(split_dataset(numbered_dataset(1), 0.8, 1), ContractError);
  EXPECT_THROW(split_dataset(numbered_dataset(5), 1.0, 1), ConfigError);
}

TEST(SplitDataset, EachGraphTrainsAboutEightyPercent) {
  const Dataset ds = numbered_dataset(100);
  std::vector<int> counts(100, 0);
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    for (std::size_t id : split_dataset(ds, 0.8, seed).train) ++counts[id];
  for (int c : counts) EXPECT_NEAR(c / 1000.0, 0.8, 0.05);
}

TEST(CrossEntropy, Examples) {
  EXPECT_NEAR(cross_entropy_value(Matrix(1, 4, 0.3), 2), std::log(4.0), 1e-15);
  EXPECT_LT(cross_entropy_value(Matrix(1, 3, {0, 30, 0}), 1), 1e-9);
  ad::Tape tape;
  EXPECT_THROW(cross_entropy(tape.leaf(Matrix(1, 3)), 3), ContractError);
}

TEST(CrossEntropy, MatchesNaiveFormula) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const Matrix z = random_matrix(1, 5, rng, -4, 4);
    const std::size_t y = static_cast<std::size_t>(t) % 5;
    double denom = 0.0;
    for (double v : z.data) denom += std::exp(v);
    EXPECT_NEAR(cross_entropy_value(z, y), -std::log(std::exp(z(0, y)) / denom), 1e-12);
  }
}

TEST(AdamStep, ZeroGradientNoDecayLeavesParams) {
  Matrix theta(2, 2, {1, -2, 3, 4});
  const Matrix before = theta;
  std::vector<Matrix*> params{&theta};
  auto state = AdamState::zeros_like(params);
  const std::vector<Matrix> grads{Matrix(2, 2)};
  adam_step(params, grads, {true}, state, 0.01, 0.0);
  EXPECT_EQ(theta, before);
}

TEST(AdamStep, FirstStepMovesBySignTimesLr) {
  Matrix theta(1, 3, {0.5, 0.5, 0.5});
  std::vector<Matrix*> params{&theta};
  auto state = AdamState::zeros_like(params);
  const std::vector<Matrix> grads{Matrix(1, 3, {2.0, -0.001, 50.0})};
  adam_step(params, grads, {false}, state, 0.01, 0.0);
  EXPECT_NEAR(theta(0, 0), 0.49, 1e-6);
  EXPECT_NEAR(theta(0, 1), 0.51, 1e-6);
  EXPECT_NEAR(theta(0, 2), 0.49, 1e-6);
}

TEST(AdamStep, ZeroLearningRateIsBitIdentical) {
  std::mt19937_64 rng(2);
  GatConfig cfg;
  cfg.in_dim = 3;
  GatModel model = init_params(cfg, 1);
  const GatModel before = model;
  auto params = model.parameters();
  auto state = AdamState::zeros_like(params);
  std::vector<Matrix> grads;
  for (const Matrix* p : params) grads.push_back(random_matrix(p->rows, p->cols, rng));
  TrainConfig tr;
  tr.lr = 0.0;
  adam_step(model, grads, state, tr);
  EXPECT_EQ(model, before);
}

TEST(AdamStep, DecayFoldsIntoGradientExceptBias) {
  // Zero gradient plus decay: only decaying blocks move, towards zero.
  Matrix w(1, 1, {1.0}), b(1, 1, {1.0});
  std::vector<Matrix*> params{&w, &b};
  auto state = AdamState::zeros_like(params);
  const std::vector<Matrix> grads{Matrix(1, 1), Matrix(1, 1)};
  adam_step(params, grads, {true, false}, state, 0.1, 5e-4);
  EXPECT_NEAR(w(0, 0), 1.0 - 0.1 * 5e-4 / (5e-4 + 1e-8), 1e-12);
  EXPECT_EQ(b(0, 0), 1.0);
}

TEST(AdamStep, ConvergesOnSquaredNorm) {
  Matrix theta(1, 2, {1.0, 1.0});
  std::vector<Matrix*> params{&theta};
  auto state = AdamState::zeros_like(params);
  for (int step = 0; step < 200; ++step) {
    const std::vector<Matrix> grads{Matrix(1, 2, {2 * theta(0, 0), 2 * theta(0, 1)})};
    adam_step(params, grads, {false}, state, 0.1, 0.0);
  }
  EXPECT_LT(std::hypot(theta(0, 0), theta(0, 1)), 1e-2);
}

TEST(Train, OverfitsToySetAndLossFalls) {
  const Dataset ds = toy_set();
  TrainConfig tr;
  tr.seed = 3;
  const auto res = train(ds, toy_extraction(ds), toy_gat(ds), tr);
  ASSERT_EQ(res.logs.size(), 100u);
  EXPECT_GE(res.logs.back().subgraph_train_accuracy, 0.95);
  EXPECT_LT(res.logs[9].mean_train_loss, res.logs[0].mean_train_loss);
  for (const auto& log : res.logs) EXPECT_TRUE(std::isfinite(log.mean_train_loss));
}

TEST(Train, NoTestParentUsedForTraining) {
  const Dataset ds = toy_set();
  TrainConfig tr;
  tr.epochs = 2;
  tr.seed = 4;
  const auto res = train(ds, toy_extraction(ds), toy_gat(ds), tr);
  const std::set<std::size_t> test(res.split.test.begin(), res.split.test.end());
  ASSERT_FALSE(res.training_parents.empty());
  for (std::size_t p : res.training_parents) EXPECT_EQ(test.count(p), 0u);
}

TEST(Train, SeededRunsAreIdentical) {
  const Dataset ds = toy_set();
  TrainConfig tr;
  tr.epochs = 5;
  tr.seed = 5;
  tr.batch = 4;
  const auto a = train(ds, toy_extraction(ds), toy_gat(ds), tr);
  const auto b = train(ds, toy_extraction(ds), toy_gat(ds), tr);
  tr.workers = 3;
  const auto c = train(ds, toy_extraction(ds), toy_gat(ds), tr);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.model, c.model);
  for (std::size_t e = 0; e < a.logs.size(); ++e) {
    EXPECT_EQ(a.logs[e].mean_train_loss, b.logs[e].mean_train_loss);
    EXPECT_EQ(a.logs[e].subgraph_train_accuracy, b.logs[e].subgraph_train_accuracy);
    EXPECT_EQ(a.logs[e].mean_train_loss, c.logs[e].mean_train_loss);
  }
}

TEST(Train, NoSurvivingSubgraphsNamesThresholds) {
  const Dataset ds = toy_set();
  ExtractionConfig ext = toy_extraction(ds);
  ext.min_nodes = 1000;
  try {
    train(ds, ext, toy_gat(ds), TrainConfig{});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("min_nodes"), std::string::npos);
  }
}

TEST(Train, NonFiniteLossAborts) {
  const Dataset ds = toy_set();
  auto instances = make_whole_graph_instances(ds, std::vector<std::size_t>{0, 1});
  instances[1].features(0, 0) = std::nan("");
  TrainConfig tr;
  tr.epochs = 1;
  EXPECT_THROW(fit(instances, toy_gat(ds), tr), TrainingError);
}

TEST(Train, WholeGraphBaselineRuns) {
  const Dataset ds = toy_set();
  TrainConfig tr;
  tr.epochs = 3;
  const auto res = train_whole_graphs(ds, toy_gat(ds), tr);
  EXPECT_EQ(res.training_parents.size(), res.split.train.size());
  EXPECT_EQ(res.logs.size(), 3u);
}

TEST(TrainConfig, Validation) {
  TrainConfig tr;
  tr.dropout_p = 1.5;
  EXPECT_THROW(tr.validate(), ConfigError);
  tr = {};
  tr.lr = 0.0;
  EXPECT_THROW(tr.validate(), ConfigError);
  tr = {};
  tr.batch = 0;
  EXPECT_THROW(tr.validate(), ConfigError);
}
