#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../support/oracles.hpp"
#include "wsgat/errors.hpp"
#include "wsgat/model.hpp"
#include "wsgat/random.hpp"

using namespace wsgat;
using wsgat::testing::max_abs_diff;
using wsgat::testing::max_relative_error;
using wsgat::testing::numeric_gradient;
using wsgat::testing::random_graph;
using wsgat::testing::random_matrix;

namespace {

GatConfig small_config(std::size_t in_dim, std::size_t classes = 3) {
  GatConfig cfg;
  cfg.in_dim = in_dim;
  cfg.hidden_dim = 3;
  cfg.num_heads = 2;
  cfg.out_hidden = 4;
  cfg.num_classes = classes;
  return cfg;
}

Subgraph random_subgraph(std::size_t n, std::size_t labels, std::mt19937_64& rng) {
  const Graph g = random_graph(n, 0.4, static_cast<int>(labels), rng);
  return whole_graph_instance(g, one_hot_features(g, static_cast<int>(labels)));
}

std::vector<Edge> directed_edges(const EdgeIndex& idx) {
  std::vector<Edge> out;
  for (std::size_t e = 0; e < idx.src.size(); ++e) out.push_back({idx.src[e], idx.dst[e]});
  return out;
}

}  // namespace

TEST(AttentionLayer, SingleInEdgeGetsAllAttention) {
  std::mt19937_64 rng(1);
  // Without self-loops, node 1 only hears from node 0.
  const EdgeIndex idx = build_edge_index(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}}, false);
  ad::Tape tape;
  const auto out = attention_layer(tape.leaf(random_matrix(3, 2, rng)), idx, tape.leaf(random_matrix(2, 4, rng)),
                                   tape.leaf(random_matrix(8, 1, rng)), 0.2);
  for (std::size_t e = 0; e < idx.dst.size(); ++e)
    if (idx.dst[e] == 0 || idx.dst[e] == 2) EXPECT_EQ(out.alpha.value()(e, 0), 1.0);
}

TEST(AttentionLayer, ZeroAttentionVectorIsUniform) {
  std::mt19937_64 rng(2);
  const auto sub = random_subgraph(7, 3, rng);
  const EdgeIndex idx = build_edge_index(7, sub.edges, true);
  ad::Tape tape;
  const auto out = attention_layer(tape.leaf(sub.features), idx, tape.leaf(random_matrix(3, 4, rng)),
                                   tape.leaf(Matrix(8, 1)), 0.2);
  std::vector<double> deg(7, 0.0);
  for (std::size_t d : idx.dst) deg[d] += 1.0;
  for (std::size_t e = 0; e < idx.dst.size(); ++e) EXPECT_NEAR(out.alpha.value()(e, 0), 1.0 / deg[idx.dst[e]], 1e-15);
}

TEST(AttentionLayer, MatchesNaiveDoubleLoop) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial) % 8;
    const auto sub = random_subgraph(n, 4, rng);
    const EdgeIndex idx = build_edge_index(n, sub.edges, true);
    const Matrix w = random_matrix(4, 5, rng), a = random_matrix(10, 1, rng);
    ad::Tape tape;
    const auto out = attention_layer(tape.leaf(sub.features), idx, tape.leaf(w), tape.leaf(a), 0.2);
    const auto oracle = wsgat::testing::naive_attention_layer(sub.features, directed_edges(idx), w, a, 0.2);
    EXPECT_LT(max_abs_diff(out.features.value(), oracle.out), 1e-12);
    for (std::size_t e = 0; e < idx.dst.size(); ++e) {
      const auto& row = oracle.alpha[idx.dst[e]];
      const auto it = std::find_if(row.begin(), row.end(), [&](const auto& p) { return p.first == idx.src[e]; });
      ASSERT_NE(it, row.end());
      EXPECT_NEAR(out.alpha.value()(e, 0), it->second, 1e-12);
    }
  }
}

TEST(AttentionLayer, CycleWithIdenticalFeaturesIsSymmetric) {
  std::mt19937_64 rng(4);
  std::vector<Edge> cycle;
  for (std::size_t i = 0; i < 6; ++i) {
    cycle.push_back({i, (i + 1) % 6});
    cycle.push_back({(i + 1) % 6, i});
  }
  const EdgeIndex idx = build_edge_index(6, cycle, true);
  ad::Tape tape;
  const auto out = attention_layer(tape.leaf(Matrix(6, 2, 1.0)), idx, tape.leaf(random_matrix(2, 3, rng)),
                                   tape.leaf(random_matrix(6, 1, rng)), 0.2);
  const auto pooled = ad::mean_rows(out.features).value();
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_NEAR(out.features.value()(r, c), out.features.value()(0, c), 1e-15);
      EXPECT_NEAR(pooled(0, c), out.features.value()(r, c), 1e-15);
    }
  for (std::size_t e = 0; e < idx.dst.size(); ++e) EXPECT_NEAR(out.alpha.value()(e, 0), 1.0 / 3.0, 1e-15);
}

TEST(AttentionLayer, IsolatedNodeWithoutSelfLoopsIsZero) {
  const EdgeIndex idx = build_edge_index(3, {{0, 1}, {1, 0}}, false);
  EXPECT_EQ(idx.isolated, (std::vector<std::size_t>{2}));
  std::mt19937_64 rng(5);
  ad::Tape tape;
  const auto out = attention_layer(tape.leaf(random_matrix(3, 2, rng)), idx, tape.leaf(random_matrix(2, 3, rng)),
                                   tape.leaf(random_matrix(6, 1, rng)), 0.2);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.features.value()(2, c), 0.0);

  GatConfig cfg = small_config(2);
  cfg.add_self_loops = false;
  Subgraph sub;
  sub.node_map = {0, 1, 2};
  sub.edges = {{0, 1}, {1, 0}};
  sub.features = random_matrix(3, 2, rng);
  const auto pred = predict(init_params(cfg, 1), sub);
  EXPECT_EQ(pred.attention.isolated_nodes, (std::vector<std::size_t>{2}));
}

TEST(Forward, ProbabilitiesAndAttentionNormalized) {
  std::mt19937_64 rng(6);
  const GatConfig cfg = small_config(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sub = random_subgraph(3 + static_cast<std::size_t>(trial) % 10, 4, rng);
    const auto pred = predict(init_params(cfg, static_cast<std::uint64_t>(trial)), sub);
    EXPECT_NEAR(std::accumulate(pred.probs.begin(), pred.probs.end(), 0.0), 1.0, 1e-9);
    ASSERT_EQ(pred.attention.heads.size(), cfg.num_heads + 1);
    for (const auto& head : pred.attention.heads) {
      std::vector<double> sums(sub.num_nodes(), 0.0);
      for (std::size_t e = 0; e < head.dst.size(); ++e) sums[head.dst[e]] += head.alpha[e];
      for (double s : sums) EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Forward, PermutationInvariant) {
  std::mt19937_64 rng(7);
  const GatConfig cfg = small_config(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sub = random_subgraph(8, 3, rng);
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Subgraph p = sub;
    for (std::size_t k = 0; k < 8; ++k)
      for (std::size_t c = 0; c < 3; ++c) p.features(perm[k], c) = sub.features(k, c);
    p.edges.clear();
    for (const auto& e : sub.edges) p.edges.push_back({perm[e.src], perm[e.dst]});
    const auto model = init_params(cfg, 99);
    const auto a = predict(model, sub), b = predict(model, p);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(a.probs[c], b.probs[c], 1e-9);
  }
}

TEST(Forward, EvalIsDeterministicTrainUsesDropout) {
  std::mt19937_64 rng(8);
  const GatConfig cfg = small_config(3);
  const auto sub = random_subgraph(8, 3, rng);
  const auto model = init_params(cfg, 5);
  const auto a = predict(model, sub), b = predict(model, sub);
  EXPECT_EQ(a.logits, b.logits);

  ad::Tape t1, t2;
  std::mt19937_64 r1(1), r2(2);
  const auto x = forward(t1, bind_params(t1, model, false), cfg, sub, Mode::train, r1);
  const auto y = forward(t2, bind_params(t2, model, false), cfg, sub, Mode::train, r2);
  EXPECT_NE(x.logits.value(), y.logits.value());
}

TEST(Forward, FeatureWidthMismatchIsConfigError) {
  std::mt19937_64 rng(9);
  const auto sub = random_subgraph(5, 4, rng);
  EXPECT_THROW(predict(init_params(small_config(3), 1), sub), ConfigError);
}

TEST(Forward, FullModelGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(10);
  const GatConfig cfg = small_config(3);
  GatModel model = init_params(cfg, 11);
  for (Matrix* m : model.parameters())
    for (double& v : m->data) v += 0.1 * (wsgat::uniform01(rng) - 0.5);
  const auto sub = random_subgraph(6, 3, rng);
  const std::size_t label = 1;

  const auto loss_of = [&](ad::Tape& tape, const BoundParams& p) {
    std::mt19937_64 unused(0);
    const auto fr = forward(tape, p, cfg, sub, Mode::eval, unused);
    return ad::scale(ad::pick(ad::log_softmax_rows(fr.logits), 0, label), -1.0);
  };
  ad::Tape tape;
  const auto bound = bind_params(tape, model, true);
  tape.backward(loss_of(tape, bound));
  const auto grads = collect_gradients(bound);

  auto params = model.parameters();
  const auto names = model.parameter_names();
  for (std::size_t b = 0; b < params.size(); ++b) {
    const auto numeric = numeric_gradient(*params[b], [&] {
      ad::Tape t;
      return loss_of(t, bind_params(t, model, false)).value()(0, 0);
    });
    EXPECT_LT(max_relative_error(grads[b], numeric, 1e-6), 1e-3) << names[b];
  }
}

TEST(InitParams, DeterministicBoundedAndCentred) {
  GatConfig cfg;
  cfg.in_dim = 100;
  cfg.hidden_dim = 100;
  cfg.num_heads = 1;
  EXPECT_EQ(init_params(cfg, 3), init_params(cfg, 3));
  EXPECT_NE(init_params(cfg, 3), init_params(cfg, 4));

  const GatModel m = init_params(cfg, 3);
  const auto check_bound = [](const Matrix& w) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (double v : w.data) EXPECT_LE(std::abs(v), bound);
  };
  check_bound(m.head_weights[0]);
  check_bound(m.head_attention[0]);
  check_bound(m.weights2);
  check_bound(m.attention2);
  check_bound(m.out_weights);
  EXPECT_EQ(m.out_bias, Matrix(1, cfg.num_classes));

  // 10^4 entries of the first head; the mean stays within 3 standard errors.
  const Matrix& w = m.head_weights[0];
  ASSERT_EQ(w.size(), 10000u);
  const double bound = std::sqrt(6.0 / 200.0);
  const double sigma = bound / std::sqrt(3.0);
  const double mean = std::accumulate(w.data.begin(), w.data.end(), 0.0) / 1e4;
  EXPECT_LT(std::abs(mean), 3.0 * sigma / 100.0);
}

TEST(InitParams, ParameterOrderAndNames) {
  GatModel m = init_params(small_config(3), 1);
  const auto names = m.parameter_names();
  ASSERT_EQ(names.size(), m.parameters().size());
  EXPECT_EQ(names.front(), "layer1.head0.W");
  EXPECT_EQ(names.back(), "out.b");
  EXPECT_FALSE(GatModel::decays(names.size() - 1, names.size()));
  EXPECT_TRUE(GatModel::decays(0, names.size()));
}

TEST(GatConfig, Validation) {
  GatConfig cfg = small_config(3);
  cfg.dropout_p = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config(3);
  cfg.leaky_slope = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config(0);
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Checkpoint, BitExactRoundTripAndStableBytes) {
  std::mt19937_64 rng(12);
  GatModel m = init_params(small_config(5, 4), 77);
  m.out_bias = random_matrix(1, 4, rng);
  m.out_bias(0, 0) = 1e-310;  // subnormal survives
  const auto dir = wsgat::testing::temp_dir("ckpt");
  save_checkpoint(m, dir / "a.ckpt");
  const GatModel back = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(back, m);
  save_checkpoint(back, dir / "b.ckpt");
  EXPECT_EQ(wsgat::testing::slurp(dir / "a.ckpt"), wsgat::testing::slurp(dir / "b.ckpt"));
}

TEST(Checkpoint, RejectsDamagedFiles) {
  const auto dir = wsgat::testing::temp_dir("ckpt_bad");
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
  wsgat::testing::write_text(dir / "junk.ckpt", "hello world\n");
  EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), IoError);

  save_checkpoint(init_params(small_config(2), 1), dir / "ok.ckpt");
  std::string text = wsgat::testing::slurp(dir / "ok.ckpt");
  wsgat::testing::write_text(dir / "cut.ckpt", text.substr(0, text.size() / 2));
  EXPECT_THROW(load_checkpoint(dir / "cut.ckpt"), IoError);
}
