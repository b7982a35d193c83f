#pragma once

// Reverse-mode differentiation over dense matrices. A Tape records every
// operation applied to its tensors; Tape::backward walks the record in
// reverse and accumulates gradients into every tensor that requires them.
//
// Only the operations the GAT forward pass needs are provided.

#include <cstddef>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "wsgat/matrix.hpp"

namespace wsgat::ad {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Tensor {
 public:
  Tensor() = default;

  std::size_t rows() const;
  std::size_t cols() const;
  const Matrix& value() const;
  // Gradient after Tape::backward. Zero-shaped if the tensor does not require grad.
  const Matrix& grad() const;
  bool requires_grad() const;

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Receives the gradient of the operation's output; accumulates into inputs.
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Matrix value, bool requires_grad = false);

  // Used by operations: records `value` as the output of a node with the
  // given inputs. `fn` is dropped when no input requires a gradient.
  Tensor record(Matrix value, std::span<const Tensor> inputs, BackwardFn fn);

  // Gradient buffer of `t` for accumulation, or nullptr if `t` does not
  // require a gradient.
  Matrix* grad_sink(const Tensor& t);

  // Populates gradients of every requires_grad tensor w.r.t. `loss` (1x1).
  // May be called once per tape.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  friend class Tensor;

  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  Node& node(const Tensor& t);
  const Node& node(const Tensor& t) const;

  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// x (n x m) plus bias row b (1 x m) broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor elu(const Tensor& x, double alpha = 1.0);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor mean_rows(const Tensor& x);
Tensor sum_all(const Tensor& x);
Tensor pick(const Tensor& x, std::size_t row, std::size_t col);
Tensor log_softmax_rows(const Tensor& x);
Tensor softmax_rows(const Tensor& x);

// Softmax over the entries of an (E x 1) column that share a segment id.
// Stabilized by subtracting each segment's maximum.
Tensor segment_softmax(const Tensor& logits, std::span<const std::size_t> segment_of,
                       std::size_t num_segments);

// Row s of the result = sum over entries e in segment s of weights[e] * values[e].
// Segments with no entries produce zero rows.
Tensor segment_weighted_sum(const Tensor& values, const Tensor& weights,
                            std::span<const std::size_t> segment_of, std::size_t num_segments);

// Inverted dropout: surviving entries are scaled by 1/(1-p). Identity when !train.
Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng, bool train);

}  // namespace wsgat::ad
