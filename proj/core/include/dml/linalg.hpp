#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dml/errors.hpp"

namespace dml {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }

  bool operator==(const Matrix&) const = default;
};

inline constexpr double kNormEpsilon = 1e-12;

double norm2(std::span<const double> v);

// Unit-norm copy of v. Throws NormTooSmall when ||v|| <= 1e-12: a
// near-zero embedding indicates a dead network and must surface.
Vector l2_normalize(std::span<const double> v);

// In-place row normalization; throws on any degenerate row.
void l2_normalize_rows(Matrix& m);

double sq_euclidean(std::span<const double> u, std::span<const double> v);
double dot(std::span<const double> u, std::span<const double> v);

bool all_finite(std::span<const double> v);

}  // namespace dml
