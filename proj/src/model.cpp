#include "wsgat/model.hpp"

#include <algorithm>
#include <cmath>

#include "wsgat/errors.hpp"
#include "wsgat/random.hpp"

namespace wsgat {

void GatConfig::validate() const {
  if (in_dim < 1) throw ConfigError("in_dim", "must be >= 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim", "must be >= 1");
  if (num_heads < 1) throw ConfigError("num_heads", "must be >= 1");
  if (out_hidden < 1) throw ConfigError("out_hidden", "must be >= 1");
  if (num_classes < 1) throw ConfigError("num_classes", "must be >= 1");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope", "must lie in (0, 1)");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p", "must lie in [0, 1)");
}

std::vector<Matrix*> GatModel::parameters() {
  std::vector<Matrix*> out;
  for (std::size_t k = 0; k < head_weights.size(); ++k) {
    out.push_back(&head_weights[k]);
    out.push_back(&head_attention[k]);
  }
  for (Matrix* m : {&weights2, &attention2, &out_weights, &out_bias}) out.push_back(m);
  return out;
}

std::vector<const Matrix*> GatModel::parameters() const {
  auto mutable_view = const_cast<GatModel*>(this)->parameters();
  return {mutable_view.begin(), mutable_view.end()};
}

std::vector<std::string> GatModel::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < head_weights.size(); ++k) {
    names.push_back("layer1.head" + std::to_string(k) + ".W");
    names.push_back("layer1.head" + std::to_string(k) + ".a");
  }
  for (const char* n : {"layer2.W", "layer2.a", "out.W", "out.b"}) names.emplace_back(n);
  return names;
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data) v = uniform(rng, -bound, bound);
  return m;
}

}  // namespace

GatModel init_params(const GatConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  auto rng = derived_rng({seed, 0x6761u});
  GatModel m;
  m.config = cfg;
  for (std::size_t k = 0; k < cfg.num_heads; ++k) {
    m.head_weights.push_back(glorot(cfg.in_dim, cfg.hidden_dim, rng));
    m.head_attention.push_back(glorot(2 * cfg.hidden_dim, 1, rng));
  }
  m.weights2 = glorot(cfg.num_heads * cfg.hidden_dim, cfg.out_hidden, rng);
  m.attention2 = glorot(2 * cfg.out_hidden, 1, rng);
  m.out_weights = glorot(cfg.out_hidden, cfg.num_classes, rng);
  m.out_bias = Matrix(1, cfg.num_classes);
  return m;
}

EdgeIndex build_edge_index(std::size_t num_nodes, const std::vector<Edge>& edges, bool add_self_loops) {
  std::vector<Edge> directed;
  directed.reserve(edges.size() + (add_self_loops ? num_nodes : 0));
  for (const auto& e : edges) {
    if (e.src >= num_nodes || e.dst >= num_nodes) throw ContractError("edge index: endpoint out of range");
    if (e.src != e.dst || !add_self_loops) directed.push_back(e);
  }
  if (add_self_loops) {
    for (std::size_t n = 0; n < num_nodes; ++n) directed.push_back({n, n});
  }
  // Group by destination.
  std::sort(directed.begin(), directed.end(),
            [](const Edge& a, const Edge& b) { return a.dst != b.dst ? a.dst < b.dst : a.src < b.src; });

  EdgeIndex idx;
  idx.num_nodes = num_nodes;
  idx.src.reserve(directed.size());
  idx.dst.reserve(directed.size());
  std::vector<bool> has_in(num_nodes, false);
  for (const auto& e : directed) {
    idx.src.push_back(e.src);
    idx.dst.push_back(e.dst);
    has_in[e.dst] = true;
  }
  for (std::size_t n = 0; n < num_nodes; ++n) {
    if (!has_in[n]) idx.isolated.push_back(n);
  }
  return idx;
}

const AttentionHead* AttentionRecord::find(int layer, int head) const {
  for (const auto& h : heads) {
    if (h.layer == layer && h.head == head) return &h;
  }
  return nullptr;
}

AttentionOutput attention_layer(const ad::Tensor& h, const EdgeIndex& edges, const ad::Tensor& w,
                                const ad::Tensor& a, double slope) {
  if (h.rows() != edges.num_nodes) {
    throw ShapeError("attention_layer: " + std::to_string(h.rows()) + " feature rows for " +
                     std::to_string(edges.num_nodes) + " nodes");
  }
  const std::size_t width = w.cols();
  if (a.rows() != 2 * width || a.cols() != 1) {
    throw ShapeError("attention_layer: attention vector " + a.value().shape_string() +
                     " does not match projection width " + std::to_string(width));
  }
  const ad::Tensor z = ad::matmul(h, w);
  const ad::Tensor score_dst = ad::matmul(z, ad::slice_rows(a, 0, width));
  const ad::Tensor score_src = ad::matmul(z, ad::slice_rows(a, width, width));
  const ad::Tensor logits = ad::leaky_relu(
      ad::add(ad::gather_rows(score_dst, edges.dst), ad::gather_rows(score_src, edges.src)), slope);
  const ad::Tensor alpha = ad::segment_softmax(logits, edges.dst, edges.num_nodes);
  const ad::Tensor out =
      ad::segment_weighted_sum(ad::gather_rows(z, edges.src), alpha, edges.dst, edges.num_nodes);
  return {out, alpha};
}

std::vector<ad::Tensor> BoundParams::all() const {
  std::vector<ad::Tensor> out;
  for (std::size_t k = 0; k < head_weights.size(); ++k) {
    out.push_back(head_weights[k]);
    out.push_back(head_attention[k]);
  }
  for (const auto& t : {weights2, attention2, out_weights, out_bias}) out.push_back(t);
  return out;
}

BoundParams bind_params(ad::Tape& tape, const GatModel& model, bool requires_grad) {
  BoundParams p;
  for (std::size_t k = 0; k < model.head_weights.size(); ++k) {
    p.head_weights.push_back(tape.leaf(model.head_weights[k], requires_grad));
    p.head_attention.push_back(tape.leaf(model.head_attention[k], requires_grad));
  }
  p.weights2 = tape.leaf(model.weights2, requires_grad);
  p.attention2 = tape.leaf(model.attention2, requires_grad);
  p.out_weights = tape.leaf(model.out_weights, requires_grad);
  p.out_bias = tape.leaf(model.out_bias, requires_grad);
  return p;
}

std::vector<Matrix> collect_gradients(const BoundParams& params) {
  std::vector<Matrix> grads;
  for (const auto& t : params.all()) {
    const Matrix& g = t.grad();
    grads.push_back(g.size() == t.value().size() ? g : Matrix(t.rows(), t.cols()));
  }
  return grads;
}

namespace {

AttentionHead record_head(int layer, int head, const EdgeIndex& edges, const ad::Tensor& alpha) {
  return {layer, head, edges.dst, edges.src, alpha.value().data};
}

}  // namespace

ForwardResult forward(ad::Tape& tape, const BoundParams& params, const GatConfig& cfg,
                      const FeatureMatrix& features, const EdgeIndex& edges, Mode mode,
                      std::mt19937_64& rng) {
  if (features.cols != cfg.in_dim) {
    throw ConfigError("in_dim", "feature width " + std::to_string(features.cols) +
                                    " does not match configured in_dim " + std::to_string(cfg.in_dim));
  }
  if (features.rows == 0) throw ContractError("forward: empty graph");
  const bool train = mode == Mode::train;
  ForwardResult result;
  result.attention.isolated_nodes = edges.isolated;

  const ad::Tensor h0 = tape.leaf(features);
  std::vector<ad::Tensor> heads;
  heads.reserve(params.head_weights.size());
  for (std::size_t k = 0; k < params.head_weights.size(); ++k) {
    auto out = attention_layer(h0, edges, params.head_weights[k], params.head_attention[k], cfg.leaky_slope);
    heads.push_back(ad::elu(out.features));
    result.attention.heads.push_back(record_head(1, static_cast<int>(k), edges, out.alpha));
  }
  ad::Tensor h1 = ad::dropout(ad::concat_cols(heads), cfg.dropout_p, rng, train);

  auto layer2 = attention_layer(h1, edges, params.weights2, params.attention2, cfg.leaky_slope);
  result.attention.heads.push_back(record_head(2, 0, edges, layer2.alpha));
  ad::Tensor h2 = ad::dropout(ad::elu(layer2.features), cfg.dropout_p, rng, train);

  const ad::Tensor pooled = ad::mean_rows(h2);
  result.logits = ad::add_bias(ad::matmul(pooled, params.out_weights), params.out_bias);

  const Matrix& z = result.logits.value();
  result.probs = Matrix(1, z.cols);
  const double mx = *std::max_element(z.data.begin(), z.data.end());
  double s = 0.0;
  for (std::size_t c = 0; c < z.cols; ++c) s += (result.probs.data[c] = std::exp(z.data[c] - mx));
  for (double& p : result.probs.data) p /= s;
  return result;
}

ForwardResult forward(ad::Tape& tape, const BoundParams& params, const GatConfig& cfg,
                      const Subgraph& sub, Mode mode, std::mt19937_64& rng) {
  const auto edges = build_edge_index(sub.num_nodes(), sub.edges, cfg.add_self_loops);
  return forward(tape, params, cfg, sub.features, edges, mode, rng);
}

Prediction predict(const GatModel& model, const Subgraph& sub) {
  ad::Tape tape;
  const auto params = bind_params(tape, model, false);
  std::mt19937_64 unused_rng(0);
  auto fr = forward(tape, params, model.config, sub, Mode::eval, unused_rng);
  return {fr.logits.value().data, std::move(fr.probs.data), std::move(fr.attention)};
}

}  // namespace wsgat
