#include "gridalloc/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace gridalloc {

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Tensor t(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != t.n_cols) throw std::invalid_argument("ragged initializer rows");
    std::size_t c = 0;
    for (double v : row) t.at(r, c++) = v;
    ++r;
  }
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(n_rows) + " x " + std::to_string(n_cols) + "]";
}

}  // namespace gridalloc
