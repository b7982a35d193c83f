#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wsgat {

// Dense row-major matrix of doubles. Column vectors are (n x 1).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const noexcept { return data.size(); }
  bool same_shape(const Matrix& other) const noexcept {
    return rows == other.rows && cols == other.cols;
  }
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Node features are one-hot rows; kept as a plain matrix.
using FeatureMatrix = Matrix;

}  // namespace wsgat
