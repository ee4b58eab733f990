#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace gridalloc {

/// Dense row-major 2-D tensor of doubles. Everything in the model is a
/// matrix; scalars are [1 x 1] and vectors are [n x 1].
struct Tensor {
  std::size_t n_rows{0};
  std::size_t n_cols{0};
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols)
      : n_rows(rows), n_cols(cols), data(rows * cols, 0.0) {}

  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }
  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  double& at(std::size_t r, std::size_t c) { return data[r * n_cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return n_rows == o.n_rows && n_cols == o.n_cols; }
  bool is_scalar() const { return n_rows == 1 && n_cols == 1; }
  bool all_finite() const;

  std::string shape_str() const;
};

}  // namespace gridalloc
