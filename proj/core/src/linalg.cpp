#include "dml/linalg.hpp"

#include <cmath>

namespace dml {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Vector l2_normalize(std::span<const double> v) {
  const double n = norm2(v);
  if (n <= kNormEpsilon) throw NormTooSmall(n);
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

void l2_normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    const double n = norm2(row);
    if (n <= kNormEpsilon) throw NormTooSmall(n);
    for (double& x : row) x /= n;
  }
}

double sq_euclidean(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DimMismatch("sq_euclidean: dims " + std::to_string(u.size()) + " vs " +
                      std::to_string(v.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return s;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DimMismatch("dot: dims " + std::to_string(u.size()) + " vs " +
                      std::to_string(v.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace dml
