#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wsgat/extract.hpp"
#include "wsgat/graph.hpp"
#include "wsgat/model.hpp"

namespace wsgat {

struct SubgraphScore {
  std::size_t index = 0;  // position among the parent's extracted subgraphs
  double score = 0.0;
  std::vector<double> probs;
  std::vector<double> logits;
};

enum class Aggregation { mean_probs, mean_logits_softmax };

std::string to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& s);

struct TopKConfig {
  std::size_t k = 3;
  Aggregation aggregation = Aggregation::mean_probs;

  void validate() const;
};

// Mean over final-layer destination nodes of (max incoming alpha - 1/in_degree),
// i.e. how far attention concentrates above uniform. In [0, 1); 0 for an
// empty record.
double score_subgraph(const AttentionRecord& attn);

// The k highest scores, ties to the lower index; result is in rank order.
std::vector<SubgraphScore> select_top_k(std::span<const SubgraphScore> scores, std::size_t k);

struct AggregatedPrediction {
  std::vector<double> probs;
  std::size_t predicted = 0;  // argmax, ties to the lower class id
};

AggregatedPrediction aggregate_predictions(std::span<const SubgraphScore> selected,
                                           Aggregation mode = Aggregation::mean_probs);

struct GraphEvalRecord {
  std::size_t graph_id = 0;
  int true_label = 0;
  std::size_t predicted = 0;
  std::size_t num_subgraphs = 0;  // 0 means the whole-graph fallback was used
  std::vector<double> topk_scores;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<GraphEvalRecord> records;
};

// Maps one instance to its class distribution and attention record.
using Predictor = std::function<Prediction(const Subgraph&)>;

// Test-graph instances prepared once; reused across epochs.
struct EvalGraph {
  std::size_t graph_id = 0;
  int label = 0;
  std::vector<Subgraph> subgraphs;
  Subgraph whole;  // fallback when extraction yields nothing
};

std::vector<EvalGraph> prepare_eval(const Dataset& ds, std::span<const std::size_t> ids,
                                    const ExtractionConfig& ext);

// Score, select top-K, aggregate and compare with the true label per graph.
EvalResult evaluate(const Predictor& predict_fn, std::span<const EvalGraph> graphs, const TopKConfig& topk);

EvalResult evaluate(const GatModel& model, const Dataset& ds, std::span<const std::size_t> test_ids,
                    const ExtractionConfig& ext, const TopKConfig& topk);

// One forward pass per whole graph (no extraction, no top-K).
EvalResult evaluate_whole_graphs(const GatModel& model, const Dataset& ds, std::span<const std::size_t> ids);

// CSV "graph_id,true,pred,num_subgraphs,topk_scores" with scores joined by ';'.
void write_eval_records(const std::vector<GraphEvalRecord>& records, const std::filesystem::path& path);

// Writes <stem>_top<r>.dot for each selected subgraph (node ids are parent
// indices) and <stem>_parent.dot with the selected nodes highlighted.
// Returns the written paths; nothing is written for an empty selection.
std::vector<std::filesystem::path> export_topk_dot(const Graph& g, std::span<const Subgraph> selected,
                                                   const std::filesystem::path& dir, const std::string& stem);

}  // namespace wsgat
