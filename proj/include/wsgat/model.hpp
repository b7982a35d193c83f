#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wsgat/autodiff.hpp"
#include "wsgat/extract.hpp"
#include "wsgat/graph.hpp"
#include "wsgat/matrix.hpp"

namespace wsgat {

struct GatConfig {
  std::size_t in_dim = 0;  // = dataset num_node_labels
  std::size_t hidden_dim = 8;
  std::size_t num_heads = 8;
  std::size_t out_hidden = 64;
  std::size_t num_classes = 2;
  double leaky_slope = 0.2;
  double dropout_p = 0.6;
  bool add_self_loops = true;

  void validate() const;
  friend bool operator==(const GatConfig&, const GatConfig&) = default;
};

// Layer 1: num_heads attention heads (in_dim -> hidden_dim each), concatenated.
// Layer 2: one head (num_heads*hidden_dim -> out_hidden).
// Readout: mean over nodes, then a dense layer to num_classes.
struct GatModel {
  GatConfig config;
  std::vector<Matrix> head_weights;    // in_dim x hidden_dim, per head
  std::vector<Matrix> head_attention;  // 2*hidden_dim x 1, per head
  Matrix weights2;                     // num_heads*hidden_dim x out_hidden
  Matrix attention2;                   // 2*out_hidden x 1
  Matrix out_weights;                  // out_hidden x num_classes
  Matrix out_bias;                     // 1 x num_classes

  // Every parameter block, in a fixed order (layer 1 heads as w,a pairs,
  // then layer 2 w,a, then output weights and bias).
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::vector<std::string> parameter_names() const;
  // Bias is the last block and is excluded from weight decay.
  static bool decays(std::size_t block, std::size_t num_blocks) { return block + 1 < num_blocks; }

  friend bool operator==(const GatModel&, const GatModel&) = default;
};

// Glorot-uniform weights and attention vectors, zero bias. Deterministic in seed.
GatModel init_params(const GatConfig& cfg, std::uint64_t seed);

// Directed message edges (src -> dst) grouped by destination for attention.
struct EdgeIndex {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<std::size_t> isolated;  // nodes with no incoming edge
};

EdgeIndex build_edge_index(std::size_t num_nodes, const std::vector<Edge>& edges, bool add_self_loops);

// Attention coefficients of one head for one forward pass.
struct AttentionHead {
  int layer = 0;  // 1 or 2
  int head = 0;
  std::vector<std::size_t> dst;
  std::vector<std::size_t> src;
  std::vector<double> alpha;
};

struct AttentionRecord {
  std::vector<AttentionHead> heads;
  std::vector<std::size_t> isolated_nodes;  // rows that aggregated nothing

  const AttentionHead* find(int layer, int head) const;
};

struct AttentionOutput {
  ad::Tensor features;  // N x F', before any nonlinearity
  ad::Tensor alpha;     // E x 1, aligned with the edge index
};

// Z = H W; e_ij = LeakyReLU(a^T [z_i || z_j]) for each edge j -> i;
// alpha = softmax of e over each destination; out_i = sum_j alpha_ij z_j.
AttentionOutput attention_layer(const ad::Tensor& h, const EdgeIndex& edges, const ad::Tensor& w,
                                const ad::Tensor& a, double slope);

// Model parameters placed on a tape.
struct BoundParams {
  std::vector<ad::Tensor> head_weights;
  std::vector<ad::Tensor> head_attention;
  ad::Tensor weights2;
  ad::Tensor attention2;
  ad::Tensor out_weights;
  ad::Tensor out_bias;

  std::vector<ad::Tensor> all() const;
};

BoundParams bind_params(ad::Tape& tape, const GatModel& model, bool requires_grad);

// Gradients of the bound parameters after Tape::backward, in GatModel::parameters() order.
std::vector<Matrix> collect_gradients(const BoundParams& params);

enum class Mode { train, eval };

struct ForwardResult {
  ad::Tensor logits;  // 1 x C
  Matrix probs;       // 1 x C
  AttentionRecord attention;
};

ForwardResult forward(ad::Tape& tape, const BoundParams& params, const GatConfig& cfg,
                      const FeatureMatrix& features, const EdgeIndex& edges, Mode mode,
                      std::mt19937_64& rng);

ForwardResult forward(ad::Tape& tape, const BoundParams& params, const GatConfig& cfg,
                      const Subgraph& sub, Mode mode, std::mt19937_64& rng);

struct Prediction {
  std::vector<double> logits;
  std::vector<double> probs;
  AttentionRecord attention;
};

// Eval-mode forward pass without gradient bookkeeping.
Prediction predict(const GatModel& model, const Subgraph& sub);

// Versioned plain-text container. Values are written as hexadecimal floats,
// so save/load is bit-exact and the bytes depend only on the model.
void save_checkpoint(const GatModel& model, const std::filesystem::path& path);
GatModel load_checkpoint(const std::filesystem::path& path);

}  // namespace wsgat
