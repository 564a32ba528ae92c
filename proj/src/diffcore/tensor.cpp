#include <cmath>

#include "sgc/diffcore.hpp"
#include "sgc/error.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape (" + std::to_string(rows) + ", " +
                     std::to_string(cols) + ")");
}

std::string Tensor::shape_string() const {
  return "(" + std::to_string(rows_) + ", " + std::to_string(cols_) + ")";
}

bool Tensor::all_finite() const {
  for (Real v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace sgc::inline SGC_PRECISION_TAG
