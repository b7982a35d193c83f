#include "wsgat/weaksup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "wsgat/errors.hpp"

namespace wsgat {

std::string to_string(Aggregation a) {
  return a == Aggregation::mean_probs ? "mean_probs" : "mean_logits_softmax";
}

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "mean_probs") return Aggregation::mean_probs;
  if (s == "mean_logits_softmax") return Aggregation::mean_logits_softmax;
  throw ConfigError("aggregation", "expected 'mean_probs' or 'mean_logits_softmax', got '" + s + "'");
}

void TopKConfig::validate() const {
  if (k < 1) throw ConfigError("k", "must be >= 1");
}

double score_subgraph(const AttentionRecord& attn) {
  int final_layer = 0;
  for (const auto& h : attn.heads) final_layer = std::max(final_layer, h.layer);
  double total = 0.0;
  std::size_t heads = 0;
  for (const auto& h : attn.heads) {
    if (h.layer != final_layer || h.alpha.empty()) continue;
    std::size_t nodes = 0;
    for (std::size_t d : h.dst) nodes = std::max(nodes, d + 1);
    std::vector<double> max_alpha(nodes, 0.0);
    std::vector<std::size_t> degree(nodes, 0);
    for (std::size_t e = 0; e < h.alpha.size(); ++e) {
      max_alpha[h.dst[e]] = std::max(max_alpha[h.dst[e]], h.alpha[e]);
      ++degree[h.dst[e]];
    }
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t n = 0; n < nodes; ++n) {
      if (degree[n] == 0) continue;
      sum += max_alpha[n] - 1.0 / static_cast<double>(degree[n]);
      ++counted;
    }
    if (counted == 0) continue;
    total += sum / static_cast<double>(counted);
    ++heads;
  }
  return heads == 0 ? 0.0 : total / static_cast<double>(heads);
}

std::vector<SubgraphScore> select_top_k(std::span<const SubgraphScore> scores, std::size_t k) {
  if (scores.empty()) throw ContractError("select_top_k: no subgraphs to select from");
  std::vector<SubgraphScore> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const SubgraphScore& a, const SubgraphScore& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
  });
  sorted.resize(std::min(k, sorted.size()));
  return sorted;
}

AggregatedPrediction aggregate_predictions(std::span<const SubgraphScore> selected, Aggregation mode) {
  if (selected.empty()) throw ContractError("aggregate_predictions: empty selection");
  const std::size_t classes = selected.front().probs.size();
  AggregatedPrediction out;
  out.probs.assign(classes, 0.0);
  const double inv = 1.0 / static_cast<double>(selected.size());
  if (mode == Aggregation::mean_probs) {
    for (const auto& s : selected)
      for (std::size_t c = 0; c < classes; ++c) out.probs[c] += s.probs.at(c) * inv;
  } else {
    std::vector<double> mean(classes, 0.0);
    for (const auto& s : selected)
      for (std::size_t c = 0; c < classes; ++c) mean[c] += s.logits.at(c) * inv;
    const double mx = *std::max_element(mean.begin(), mean.end());
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += (out.probs[c] = std::exp(mean[c] - mx));
    for (double& p : out.probs) p /= z;
  }
  out.predicted = static_cast<std::size_t>(std::max_element(out.probs.begin(), out.probs.end()) - out.probs.begin());
  return out;
}

std::vector<EvalGraph> prepare_eval(const Dataset& ds, std::span<const std::size_t> ids,
                                    const ExtractionConfig& ext) {
  std::vector<EvalGraph> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    const Graph& g = ds.graphs.at(id);
    const auto feats = one_hot_features(g, ds.num_node_labels);
    EvalGraph eg;
    eg.graph_id = id;
    eg.label = g.label;
    eg.subgraphs = extract(g, feats, ext);
    eg.whole = whole_graph_instance(g, feats);
    out.push_back(std::move(eg));
  }
  return out;
}

namespace {

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

EvalResult evaluate(const Predictor& predict_fn, std::span<const EvalGraph> graphs, const TopKConfig& topk) {
  topk.validate();
  EvalResult result;
  std::size_t correct = 0;
  for (const auto& eg : graphs) {
    GraphEvalRecord rec;
    rec.graph_id = eg.graph_id;
    rec.true_label = eg.label;
    rec.num_subgraphs = eg.subgraphs.size();
    if (eg.subgraphs.empty()) {
      rec.predicted = argmax(predict_fn(eg.whole).probs);
    } else {
      std::vector<SubgraphScore> scores;
      scores.reserve(eg.subgraphs.size());
      for (std::size_t i = 0; i < eg.subgraphs.size(); ++i) {
        auto p = predict_fn(eg.subgraphs[i]);
        scores.push_back({i, score_subgraph(p.attention), std::move(p.probs), std::move(p.logits)});
      }
      const auto selected = select_top_k(scores, topk.k);
      for (const auto& s : selected) rec.topk_scores.push_back(s.score);
      rec.predicted = aggregate_predictions(selected, topk.aggregation).predicted;
    }
    if (static_cast<int>(rec.predicted) == rec.true_label) ++correct;
    result.records.push_back(std::move(rec));
  }
  result.accuracy = graphs.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(graphs.size());
  return result;
}

EvalResult evaluate(const GatModel& model, const Dataset& ds, std::span<const std::size_t> test_ids,
                    const ExtractionConfig& ext, const TopKConfig& topk) {
  if (test_ids.empty()) throw ContractError("evaluate: no test graphs");
  const auto graphs = prepare_eval(ds, test_ids, ext);
  return evaluate([&model](const Subgraph& s) { return predict(model, s); }, graphs, topk);
}

EvalResult evaluate_whole_graphs(const GatModel& model, const Dataset& ds, std::span<const std::size_t> ids) {
  if (ids.empty()) throw ContractError("evaluate_whole_graphs: no graphs");
  EvalResult result;
  std::size_t correct = 0;
  for (std::size_t id : ids) {
    const Graph& g = ds.graphs.at(id);
    GraphEvalRecord rec;
    rec.graph_id = id;
    rec.true_label = g.label;
    rec.num_subgraphs = 0;
    if (g.num_nodes > 0) {
      rec.predicted = argmax(predict(model, whole_graph_instance(g, one_hot_features(g, ds.num_node_labels))).probs);
    }
    if (static_cast<int>(rec.predicted) == rec.true_label) ++correct;
    result.records.push_back(std::move(rec));
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(ids.size());
  return result;
}

void write_eval_records(const std::vector<GraphEvalRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "graph_id,true,pred,num_subgraphs,topk_scores\n" << std::setprecision(17);
  for (const auto& r : records) {
    out << r.graph_id << ',' << r.true_label << ',' << r.predicted << ',' << r.num_subgraphs << ',';
    for (std::size_t k = 0; k < r.topk_scores.size(); ++k) out << (k ? ";" : "") << r.topk_scores[k];
    out << '\n';
  }
}

namespace {

constexpr const char* kRankColors[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628"};

std::ofstream open_dot(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<std::filesystem::path> export_topk_dot(const Graph& g, std::span<const Subgraph> selected,
                                                   const std::filesystem::path& dir, const std::string& stem) {
  std::vector<std::filesystem::path> written;
  if (selected.empty()) return written;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> rank_of(g.num_nodes, none);

  for (std::size_t r = 0; r < selected.size(); ++r) {
    const Subgraph& s = selected[r];
    const auto path = dir / (stem + "_top" + std::to_string(r + 1) + ".dot");
    auto out = open_dot(path);
    out << "graph top" << (r + 1) << " {\n"
        << "  label=\"graph " << g.id << " rank " << (r + 1) << "\";\n"
        << "  node [style=filled, fillcolor=\"" << kRankColors[r % std::size(kRankColors)] << "\"];\n";
    for (std::size_t n : s.node_map) {
      out << "  " << n << ";\n";
      if (n < g.num_nodes && rank_of[n] == none) rank_of[n] = r;
    }
    for (const auto& e : s.edges) {
      if (e.src < e.dst) out << "  " << s.node_map[e.src] << " -- " << s.node_map[e.dst] << ";\n";
    }
    out << "}\n";
    if (!out) throw IoError("failed writing " + path.string());
    written.push_back(path);
  }

  const auto parent_path = dir / (stem + "_parent.dot");
  auto out = open_dot(parent_path);
  out << "graph parent {\n"
      << "  label=\"graph " << g.id << "\";\n"
      << "  node [style=filled, fillcolor=white];\n";
  for (std::size_t n = 0; n < g.num_nodes; ++n) {
    out << "  " << n;
    if (rank_of[n] != none) {
      out << " [fillcolor=\"" << kRankColors[rank_of[n] % std::size(kRankColors)] << "\"]";
    }
    out << ";\n";
  }
  for (const auto& e : g.edges) {
    if (e.src < e.dst) out << "  " << e.src << " -- " << e.dst << ";\n";
  }
  out << "}\n";
  if (!out) throw IoError("failed writing " + parent_path.string());
  written.push_back(parent_path);
  return written;
}

}  // namespace wsgat
