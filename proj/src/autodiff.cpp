#include "wsgat/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wsgat/errors.hpp"
#include "wsgat/random.hpp"

namespace wsgat::ad {
namespace {

Tape& tape_of(const Tensor& t) {
  if (t.tape() == nullptr) throw ContractError("tensor is not attached to a tape");
  return *t.tape();
}

Tape& common_tape(const Tensor& a, const Tensor& b) {
  if (a.tape() != b.tape()) throw ContractError("tensors belong to different tapes");
  return tape_of(a);
}

[[noreturn]] void shape_mismatch(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

void check_segments(const char* op, std::span<const std::size_t> segment_of, std::size_t entries,
                    std::size_t num_segments) {
  if (segment_of.size() != entries) {
    throw ShapeError(std::string(op) + ": " + std::to_string(segment_of.size()) +
                     " segment ids for " + std::to_string(entries) + " entries");
  }
  for (std::size_t s : segment_of) {
    if (s >= num_segments) {
      throw ContractError(std::string(op) + ": segment id " + std::to_string(s) + " >= " +
                          std::to_string(num_segments));
    }
  }
}

// out += a * b  (a: n x k, b: k x m)
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* orow = &out.data[i * out.cols];
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double aip = a.data[i * a.cols + p];
      if (aip == 0.0) continue;
      const double* brow = &b.data[p * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aip * brow[j];
    }
  }
}

// out += a * b^T  (a: n x m, b: k x m)
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = &b.data[j * b.cols];
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) s += arow[p] * brow[p];
      out.data[i * out.cols + j] += s;
    }
  }
}

// out += a^T * b  (a: n x k, b: n x m)
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* brow = &b.data[r * b.cols];
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double ari = a.data[r * a.cols + i];
      if (ari == 0.0) continue;
      double* orow = &out.data[i * out.cols];
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += ari * brow[j];
    }
  }
}

template <typename F>
Tensor unary(const Tensor& x, F&& forward, Tape::BackwardFn fn) {
  Tape& tape = tape_of(x);
  Matrix out(x.rows(), x.cols());
  const Matrix& in = x.value();
  for (std::size_t k = 0; k < in.size(); ++k) out.data[k] = forward(in.data[k]);
  const Tensor inputs[] = {x};
  return tape.record(std::move(out), inputs, std::move(fn));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor / Tape

std::size_t Tensor::rows() const { return value().rows; }
std::size_t Tensor::cols() const { return value().cols; }
const Matrix& Tensor::value() const { return tape_of(*this).node(*this).value; }
const Matrix& Tensor::grad() const { return tape_of(*this).node(*this).grad; }
bool Tensor::requires_grad() const { return tape_of(*this).node(*this).requires_grad; }

Tape::Node& Tape::node(const Tensor& t) {
  if (t.tape_ != this || t.id_ >= nodes_.size()) throw ContractError("tensor not on this tape");
  return nodes_[t.id_];
}

const Tape::Node& Tape::node(const Tensor& t) const {
  if (t.tape_ != this || t.id_ >= nodes_.size()) throw ContractError("tensor not on this tape");
  return nodes_[t.id_];
}

Tensor Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(Matrix value, std::span<const Tensor> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    const Node& src = node(in);
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || src.requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Matrix* Tape::grad_sink(const Tensor& t) {
  Node& n = node(t);
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() != n.value.size()) n.grad = Matrix(n.value.rows, n.value.cols);
  return &n.grad;
}

void Tape::backward(const Tensor& loss) {
  Node& root = node(loss);
  if (root.value.rows != 1 || root.value.cols != 1) {
    throw ContractError("backward: loss must be 1x1, got " + root.value.shape_string());
  }
  if (backward_done_) throw ContractError("backward: already run on this tape");
  backward_done_ = true;
  if (!root.requires_grad) return;
  grad_sink(loss)->data[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

// ---------------------------------------------------------------------------
// Operations

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& tape = common_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols != bv.rows) shape_mismatch("matmul", av, bv);
  Matrix out(av.rows, bv.cols);
  gemm_nn(av, bv, out);
  const Tensor inputs[] = {a, b};
  return tape.record(std::move(out), inputs, [a, b](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_sink(a)) gemm_nt(g, b.value(), *ga);
    if (Matrix* gb = t.grad_sink(b)) gemm_tn(a.value(), g, *gb);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape& tape = common_tape(a, b);
  if (!a.value().same_shape(b.value())) shape_mismatch("add", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] += b.value().data[k];
  const Tensor inputs[] = {a, b};
  return tape.record(std::move(out), inputs, [a, b](Tape& t, const Matrix& g) {
    for (const Tensor& x : {a, b}) {
      if (Matrix* gx = t.grad_sink(x)) {
        for (std::size_t k = 0; k < g.size(); ++k) gx->data[k] += g.data[k];
      }
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  Tape& tape = common_tape(x, b);
  const Matrix& xv = x.value();
  const Matrix& bv = b.value();
  if (bv.rows != 1 || bv.cols != xv.cols) shape_mismatch("add_bias", xv, bv);
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += bv.data[c];
  const Tensor inputs[] = {x, b};
  return tape.record(std::move(out), inputs, [x, b](Tape& t, const Matrix& g) {
    if (Matrix* gx = t.grad_sink(x)) {
      for (std::size_t k = 0; k < g.size(); ++k) gx->data[k] += g.data[k];
    }
    if (Matrix* gb = t.grad_sink(b)) {
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) gb->data[c] += g(r, c);
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(x, [factor](double v) { return factor * v; },
               [x, factor](Tape& t, const Matrix& g) {
                 if (Matrix* gx = t.grad_sink(x)) {
                   for (std::size_t k = 0; k < g.size(); ++k) gx->data[k] += factor * g.data[k];
                 }
               });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ContractError("leaky_relu: slope must lie in (0, 1)");
  return unary(x, [slope](double v) { return v > 0.0 ? v : slope * v; },
               [x, slope](Tape& t, const Matrix& g) {
                 if (Matrix* gx = t.grad_sink(x)) {
                   const Matrix& in = x.value();
                   // x == 0 takes the slope side.
                   for (std::size_t k = 0; k < g.size(); ++k)
                     gx->data[k] += (in.data[k] > 0.0 ? 1.0 : slope) * g.data[k];
                 }
               });
}

Tensor elu(const Tensor& x, double alpha) {
  return unary(x, [alpha](double v) { return v > 0.0 ? v : alpha * std::expm1(v); },
               [x, alpha](Tape& t, const Matrix& g) {
                 if (Matrix* gx = t.grad_sink(x)) {
                   const Matrix& in = x.value();
                   for (std::size_t k = 0; k < g.size(); ++k) {
                     const double v = in.data[k];
                     gx->data[k] += (v > 0.0 ? 1.0 : alpha * std::exp(v)) * g.data[k];
                   }
                 }
               });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape& tape = tape_of(parts.front());
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    common_tape(parts.front(), p);
    if (p.rows() != rows) shape_mismatch("concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const Matrix& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols; ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols;
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return tape.record(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    std::size_t off = 0;
    for (const auto& p : inputs) {
      const std::size_t pc = p.cols();
      if (Matrix* gp = t.grad_sink(p)) {
        for (std::size_t r = 0; r < g.rows; ++r)
          for (std::size_t c = 0; c < pc; ++c) (*gp)(r, c) += g(r, off + c);
      }
      off += pc;
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  Tape& tape = tape_of(x);
  const Matrix& xv = x.value();
  Matrix out(index.size(), xv.cols);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= xv.rows) {
      throw ShapeError("gather_rows: row " + std::to_string(index[k]) + " outside " + xv.shape_string());
    }
    std::copy_n(&xv.data[index[k] * xv.cols], xv.cols, &out.data[k * xv.cols]);
  }
  const Tensor inputs[] = {x};
  return tape.record(std::move(out), inputs,
                     [x, idx = std::vector<std::size_t>(index.begin(), index.end())](Tape& t, const Matrix& g) {
                       if (Matrix* gx = t.grad_sink(x)) {
                         for (std::size_t k = 0; k < idx.size(); ++k) {
                           double* dst = &gx->data[idx[k] * gx->cols];
                           const double* src = &g.data[k * g.cols];
                           for (std::size_t c = 0; c < g.cols; ++c) dst[c] += src[c];
                         }
                       }
                     });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  Tape& tape = tape_of(x);
  const Matrix& xv = x.value();
  if (begin + count > xv.rows) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside " + xv.shape_string());
  }
  Matrix out(count, xv.cols);
  std::copy_n(&xv.data[begin * xv.cols], count * xv.cols, out.data.begin());
  const Tensor inputs[] = {x};
  return tape.record(std::move(out), inputs, [x, begin](Tape& t, const Matrix& g) {
    if (Matrix* gx = t.grad_sink(x)) {
      for (std::size_t k = 0; k < g.size(); ++k) gx->data[begin * gx->cols + k] += g.data[k];
    }
  });
}

Tensor mean_rows(const Tensor& x) {
  Tape& tape = tape_of(x);
  const Matrix& xv = x.value();
  if (xv.rows == 0) throw ShapeError("mean_rows: no rows");
  Matrix out(1, xv.cols);
  for (std::size_t r = 0; r < xv.rows; ++r)
    for (std::size_t c = 0; c < xv.cols; ++c) out.data[c] += xv(r, c);
  const double inv = 1.0 / static_cast<double>(xv.rows);
  for (double& v : out.data) v *= inv;
  const Tensor inputs[] = {x};
  return tape.record(std::move(out), inputs, [x, inv](Tape& t, const Matrix& g) {
    if (Matrix* gx = t.grad_sink(x)) {
      for (std::size_t r = 0; r < gx->rows; ++r)
        for (std::size_t c = 0; c < gx->cols; ++c) (*gx)(r, c) += inv * g.data[c];
    }
  });
}

Tensor sum_all(const Tensor& x) {
  Tape& tape = tape_of(x);
  double s = 0.0;
  for (double v : x.value().data) s += v;
  const Tensor inputs[] = {x};
  return tape.record(Matrix(1, 1, s), inputs, [x](Tape& t, const Matrix& g) {
    if (Matrix* gx = t.grad_sink(x)) {
      for (double& v : gx->data) v += g.data[0];
    }
  });
}

Tensor pick(const Tensor& x, std::size_t row, std::size_t col) {
  Tape& tape = tape_of(x);
  const Matrix& xv = x.value();
  if (row >= xv.rows || col >= xv.cols) {
    throw ShapeError("pick: (" + std::to_string(row) + ", " + std::to_string(col) + ") outside " +
                     xv.shape_string());
  }
  const Tensor inputs[] = {x};
  return tape.record(Matrix(1, 1, xv(row, col)), inputs, [x, row, col](Tape& t, const Matrix& g) {
    if (Matrix* gx = t.grad_sink(x)) (*gx)(row, col) += g.data[0];
  });
}

Tensor log_softmax_rows(const Tensor& x) {
  Tape& tape = tape_of(x);
  const Matrix& xv = x.value();
  Matrix out(xv.rows, xv.cols);
  Matrix probs(xv.rows, xv.cols);
  for (std::size_t r = 0; r < xv.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < xv.cols; ++c) mx = std::max(mx, xv(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < xv.cols; ++c) s += std::exp(xv(r, c) - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < xv.cols; ++c) {
      out(r, c) = xv(r, c) - lse;
      probs(r, c) = std::exp(out(r, c));
    }
  }
  const Tensor inputs[] = {x};
  return tape.record(std::move(out), inputs, [x, probs = std::move(probs)](Tape& t, const Matrix& g) {
    if (Matrix* gx = t.grad_sink(x)) {
      for (std::size_t r = 0; r < g.rows; ++r) {
        double gsum = 0.0;
        for (std::size_t c = 0; c < g.cols; ++c) gsum += g(r, c);
        for (std::size_t c = 0; c < g.cols; ++c) (*gx)(r, c) += g(r, c) - probs(r, c) * gsum;
      }
    }
  });
}

Tensor softmax_rows(const Tensor& x) {
  Tape& tape = tape_of(x);
  const Matrix& xv = x.value();
  Matrix out(xv.rows, xv.cols);
  for (std::size_t r = 0; r < xv.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < xv.cols; ++c) mx = std::max(mx, xv(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < xv.cols; ++c) s += (out(r, c) = std::exp(xv(r, c) - mx));
    for (std::size_t c = 0; c < xv.cols; ++c) out(r, c) /= s;
  }
  const Tensor inputs[] = {x};
  return tape.record(out, inputs, [x, y = out](Tape& t, const Matrix& g) {
    if (Matrix* gx = t.grad_sink(x)) {
      for (std::size_t r = 0; r < g.rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < g.cols; ++c) dot += g(r, c) * y(r, c);
        for (std::size_t c = 0; c < g.cols; ++c) (*gx)(r, c) += y(r, c) * (g(r, c) - dot);
      }
    }
  });
}

Tensor segment_softmax(const Tensor& logits, std::span<const std::size_t> segment_of,
                       std::size_t num_segments) {
  Tape& tape = tape_of(logits);
  const Matrix& lv = logits.value();
  if (lv.cols != 1) throw ShapeError("segment_softmax: logits must be a column, got " + lv.shape_string());
  check_segments("segment_softmax", segment_of, lv.rows, num_segments);

  std::vector<double> seg_max(num_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < lv.rows; ++e) seg_max[segment_of[e]] = std::max(seg_max[segment_of[e]], lv.data[e]);
  std::vector<double> seg_sum(num_segments, 0.0);
  Matrix out(lv.rows, 1);
  for (std::size_t e = 0; e < lv.rows; ++e) {
    out.data[e] = std::exp(lv.data[e] - seg_max[segment_of[e]]);
    seg_sum[segment_of[e]] += out.data[e];
  }
  for (std::size_t e = 0; e < lv.rows; ++e) out.data[e] /= seg_sum[segment_of[e]];

  const Tensor inputs[] = {logits};
  return tape.record(out, inputs,
                     [logits, y = out, seg = std::vector<std::size_t>(segment_of.begin(), segment_of.end()),
                      num_segments](Tape& t, const Matrix& g) {
                       Matrix* gl = t.grad_sink(logits);
                       if (gl == nullptr) return;
                       std::vector<double> dot(num_segments, 0.0);
                       for (std::size_t e = 0; e < y.rows; ++e) dot[seg[e]] += g.data[e] * y.data[e];
                       for (std::size_t e = 0; e < y.rows; ++e) gl->data[e] += y.data[e] * (g.data[e] - dot[seg[e]]);
                     });
}

Tensor segment_weighted_sum(const Tensor& values, const Tensor& weights,
                            std::span<const std::size_t> segment_of, std::size_t num_segments) {
  Tape& tape = common_tape(values, weights);
  const Matrix& vv = values.value();
  const Matrix& wv = weights.value();
  if (wv.cols != 1 || wv.rows != vv.rows) shape_mismatch("segment_weighted_sum", vv, wv);
  check_segments("segment_weighted_sum", segment_of, vv.rows, num_segments);

  Matrix out(num_segments, vv.cols);
  for (std::size_t e = 0; e < vv.rows; ++e) {
    const double w = wv.data[e];
    const double* src = &vv.data[e * vv.cols];
    double* dst = &out.data[segment_of[e] * vv.cols];
    for (std::size_t c = 0; c < vv.cols; ++c) dst[c] += w * src[c];
  }
  const Tensor inputs[] = {values, weights};
  return tape.record(std::move(out), inputs,
                     [values, weights, seg = std::vector<std::size_t>(segment_of.begin(), segment_of.end())](
                         Tape& t, const Matrix& g) {
                       const Matrix& vals = values.value();
                       const Matrix& wts = weights.value();
                       Matrix* gv = t.grad_sink(values);
                       Matrix* gw = t.grad_sink(weights);
                       for (std::size_t e = 0; e < vals.rows; ++e) {
                         const double* grow = &g.data[seg[e] * g.cols];
                         if (gv != nullptr) {
                           double* dst = &gv->data[e * vals.cols];
                           for (std::size_t c = 0; c < vals.cols; ++c) dst[c] += wts.data[e] * grow[c];
                         }
                         if (gw != nullptr) {
                           const double* src = &vals.data[e * vals.cols];
                           double s = 0.0;
                           for (std::size_t c = 0; c < vals.cols; ++c) s += src[c] * grow[c];
                           gw->data[e] += s;
                         }
                       }
                     });
}

Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng, bool train) {
  if (!(p >= 0.0 && p < 1.0)) throw ContractError("dropout: p must lie in [0, 1)");
  if (!train || p == 0.0) return x;
  Tape& tape = tape_of(x);
  const Matrix& xv = x.value();
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(xv.rows, xv.cols);
  Matrix out(xv.rows, xv.cols);
  for (std::size_t k = 0; k < xv.size(); ++k) {
    mask.data[k] = uniform01(rng) < p ? 0.0 : keep_scale;
    out.data[k] = xv.data[k] * mask.data[k];
  }
  const Tensor inputs[] = {x};
  return tape.record(std::move(out), inputs, [x, mask = std::move(mask)](Tape& t, const Matrix& g) {
    if (Matrix* gx = t.grad_sink(x)) {
      for (std::size_t k = 0; k < g.size(); ++k) gx->data[k] += mask.data[k] * g.data[k];
    }
  });
}

}  // namespace wsgat::ad
