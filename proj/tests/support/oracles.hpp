#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the code paths it checks.

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "wsgat/graph.hpp"
#include "wsgat/matrix.hpp"

namespace wsgat::testing {

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (double& v : m.data) v = d(rng);
  return m;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

// Central differences of a scalar function of `param`, perturbing in place.
inline Matrix numeric_gradient(Matrix& param, const std::function<double()>& f, double h = 1e-4) {
  Matrix g(param.rows, param.cols);
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double saved = param.data[k];
    param.data[k] = saved + h;
    const double up = f();
    param.data[k] = saved - h;
    const double down = f();
    param.data[k] = saved;
    g.data[k] = (up - down) / (2.0 * h);
  }
  return g;
}

// max |a-b| / max(|a|, |b|, floor) over entries.
inline double max_relative_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double denom = std::max({std::abs(a.data[k]), std::abs(b.data[k]), floor});
    worst = std::max(worst, std::abs(a.data[k] - b.data[k]) / denom);
  }
  return worst;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.data[k] - b.data[k]));
  return worst;
}

// Per-node double loop GAT layer: neighbors of i are sources of edges into i.
struct NaiveLayerOutput {
  Matrix out;
  std::vector<std::vector<std::pair<std::size_t, double>>> alpha;  // per destination: (src, alpha)
};

inline NaiveLayerOutput naive_attention_layer(const Matrix& h, const std::vector<Edge>& directed, const Matrix& w,
                                              const Matrix& a, double slope) {
  const std::size_t n = h.rows;
  const std::size_t f = w.cols;
  const Matrix z = naive_matmul(h, w);
  NaiveLayerOutput res{Matrix(n, f), std::vector<std::vector<std::pair<std::size_t, double>>>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> nbrs;
    for (const auto& e : directed)
      if (e.dst == i) nbrs.push_back(e.src);
    std::vector<double> ex;
    double denom = 0.0;
    for (std::size_t j : nbrs) {
      double s = 0.0;
      for (std::size_t k = 0; k < f; ++k) s += a(k, 0) * z(i, k) + a(f + k, 0) * z(j, k);
      const double e = s > 0 ? s : slope * s;
      ex.push_back(std::exp(e));
      denom += ex.back();
    }
    for (std::size_t t = 0; t < nbrs.size(); ++t) {
      const double alpha = ex[t] / denom;
      res.alpha[i].push_back({nbrs[t], alpha});
      for (std::size_t k = 0; k < f; ++k) res.out(i, k) += alpha * z(nbrs[t], k);
    }
  }
  return res;
}

// Floyd-Warshall hop distances over a symmetric edge list.
inline std::vector<std::vector<std::size_t>> all_pairs_hops(std::size_t n, const std::vector<Edge>& edges) {
  constexpr std::size_t inf = std::numeric_limits<std::size_t>::max() / 4;
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& e : edges) d[e.src][e.dst] = std::min<std::size_t>(d[e.src][e.dst], 1);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

// Union-find connectivity check.
inline bool is_connected(std::size_t n, const std::vector<Edge>& edges) {
  if (n == 0) return true;
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (const auto& e : edges) parent[find(e.src)] = find(e.dst);
  const std::size_t root = find(0);
  for (std::size_t i = 1; i < n; ++i)
    if (find(i) != root) return false;
  return true;
}

// Erdos-Renyi style symmetric graph with sorted edges.
inline Graph random_graph(std::size_t n, double p, int num_labels, std::mt19937_64& rng, std::size_t id = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> lab(0, num_labels - 1);
  Graph g;
  g.id = id;
  g.num_nodes = n;
  for (std::size_t i = 0; i < n; ++i) g.node_labels.push_back(lab(rng));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) {
        g.edges.push_back({i, j});
        g.edges.push_back({j, i});
      }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

// Node ids and undirected edges from a DOT file written as "a;" / "a -- b;" lines.
struct DotContent {
  std::set<std::size_t> nodes;
  std::set<std::pair<std::size_t, std::size_t>> edges;  // (min, max)
  std::set<std::size_t> highlighted;                    // nodes with their own fillcolor attribute
};

inline DotContent parse_dot(const std::filesystem::path& path) {
  std::ifstream in(path);
  DotContent c;
  const std::regex node_re(R"(^\s*(\d+)\s*(\[.*\])?\s*;\s*$)");
  const std::regex edge_re(R"(^\s*(\d+)\s*--\s*(\d+)\s*;\s*$)");
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (std::regex_match(line, m, edge_re)) {
      const std::size_t a = std::stoul(m[1]), b = std::stoul(m[2]);
      c.edges.insert({std::min(a, b), std::max(a, b)});
    } else if (std::regex_match(line, m, node_re)) {
      c.nodes.insert(std::stoul(m[1]));
      if (m[2].matched) c.highlighted.insert(std::stoul(m[1]));
    }
  }
  return c;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("wsgat_test_" + tag + "_" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

// Minimal zip writer (stored or raw-deflated entries) for archive tests.
inline void write_zip(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& files, bool compress) {
  std::string out, central;
  const auto put16 = [](std::string& s, std::uint16_t v) { s += char(v & 0xff); s += char(v >> 8); };
  const auto put32 = [](std::string& s, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) s += char((v >> (8 * k)) & 0xff);
  };
  for (const auto& [name, content] : files) {
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(content.data()), static_cast<uInt>(content.size())));
    std::string data = content;
    if (compress) {
      z_stream zs{};
      deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY);
      data.resize(deflateBound(&zs, content.size()) + 16);
      zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(content.data()));
      zs.avail_in = static_cast<uInt>(content.size());
      zs.next_out = reinterpret_cast<Bytef*>(data.data());
      zs.avail_out = static_cast<uInt>(data.size());
      ::deflate(&zs, Z_FINISH);
      data.resize(zs.total_out);
      deflateEnd(&zs);
    }
    const auto offset = static_cast<std::uint32_t>(out.size());
    const std::uint16_t method = compress ? 8 : 0;
    put32(out, 0x04034b50); put16(out, 20); put16(out, 0); put16(out, method); put16(out, 0); put16(out, 0);
    put32(out, crc); put32(out, static_cast<std::uint32_t>(data.size()));
    put32(out, static_cast<std::uint32_t>(content.size()));
    put16(out, static_cast<std::uint16_t>(name.size())); put16(out, 0);
    out += name;
    out += data;
    put32(central, 0x02014b50); put16(central, 20); put16(central, 20); put16(central, 0); put16(central, method);
    put16(central, 0); put16(central, 0); put32(central, crc); put32(central, static_cast<std::uint32_t>(data.size()));
    put32(central, static_cast<std::uint32_t>(content.size()));
    put16(central, static_cast<std::uint16_t>(name.size())); put16(central, 0); put16(central, 0);
    put16(central, 0); put16(central, 0); put32(central, 0); put32(central, offset);
    central += name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, 0x06054b50); put16(out, 0); put16(out, 0);
  put16(out, static_cast<std::uint16_t>(files.size())); put16(out, static_cast<std::uint16_t>(files.size()));
  put32(out, static_cast<std::uint32_t>(central.size())); put32(out, cd_offset); put16(out, 0);
  std::ofstream(path, std::ios::binary) << out;
}

}  // namespace wsgat::testing
