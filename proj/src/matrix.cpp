#include "wsgat/matrix.hpp"

#include "wsgat/errors.hpp"

namespace wsgat {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_string());
  }
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

}  // namespace wsgat
