#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "condmon/errors.hpp"

namespace condmon {

using Vec = std::vector<double>;

// Dense row-major matrix. Everything in this project is small enough
// (256x128 at most) that plain loops are fine.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(m.a); }

}  // namespace condmon
