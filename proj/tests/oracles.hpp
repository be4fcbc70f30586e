// Brute-force re-implementations used as independent oracles. These
// deliberately avoid the library's evaluation paths: distances and sums
// are recomputed with plain loops, entropies from an explicit
// contingency table.
#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "dml/density.hpp"
#include "dml/losses.hpp"

namespace oracle {

inline double dist2(const dml::Matrix& e, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < e.cols; ++k) {
    const double d = e(i, k) - e(j, k);
    s += d * d;
  }
  return s;
}

inline double contrastive_value(const dml::Matrix& e, const dml::PairSet& pairs,
                                double margin) {
  double v = 0.0;
  for (auto [i, j] : pairs.positives) v += dist2(e, i, j);
  for (auto [i, j] : pairs.negatives) v += std::max(0.0, margin - dist2(e, i, j));
  return v;
}

inline double triplet_value(const dml::Matrix& e, const dml::TripletSet& ts,
                            double margin) {
  double v = 0.0;
  for (const auto& t : ts.triplets)
    v += std::max(0.0, margin + dist2(e, t.anchor, t.positive) -
                           dist2(e, t.anchor, t.negative));
  return v;
}

inline double npair_value(const dml::Matrix& e, const dml::TupletSet& ts) {
  double v = 0.0;
  for (const auto& t : ts.tuplets) {
    double inner = 1.0;
    double ap = 0.0;
    for (std::size_t k = 0; k < e.cols; ++k) ap += e(t.anchor, k) * e(t.positive, k);
    for (std::size_t n : t.negatives) {
      double an = 0.0;
      for (std::size_t k = 0; k < e.cols; ++k) an += e(t.anchor, k) * e(n, k);
      inner += std::exp(an - ap);
    }
    v += std::log(inner);
  }
  return v;
}

// Eq.-by-eq. regularizer value: explicit centroids, explicit double
// loop over class pairs.
inline double regularizer_value(const dml::Matrix& e, const std::vector<int>& labels,
                                const dml::DensityState& state) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < labels.size(); ++r) by_class[labels[r]].push_back(r);
  std::vector<int> classes;
  for (const auto& [c, rows] : by_class)
    if (rows.size() >= 2) classes.push_back(c);
  const double cb = state.global_class_normalization
                        ? static_cast<double>(state.alphas.size())
                        : static_cast<double>(classes.size());

  double v = 0.0;
  for (int c : classes) {
    const auto& rows = by_class[c];
    std::vector<double> mu(e.cols, 0.0);
    for (std::size_t r : rows)
      for (std::size_t k = 0; k < e.cols; ++k) mu[k] += e(r, k);
    for (double& x : mu) x /= static_cast<double>(rows.size());
    double davg = 0.0;
    for (std::size_t r : rows) {
      double d = 0.0;
      for (std::size_t k = 0; k < e.cols; ++k) {
        const double t = e(r, k) - mu[k];
        d += t * t;
      }
      davg += d;
    }
    davg /= static_cast<double>(rows.size());
    const double alpha = state.alphas.at(c);
    v += (davg - alpha) * (davg - alpha) / cb - alpha / cb;
  }
  for (int ci : classes) {
    for (int cj : classes) {
      const double wi = std::pow(std::max(state.d0.at(ci), 1e-6), state.eta);
      const double wj = std::pow(std::max(state.d0.at(cj), 1e-6), state.eta);
      const double t = wj * state.alphas.at(ci) - wi * state.alphas.at(cj);
      v += t * t / (cb * cb);
    }
  }
  return v;
}

// NMI via an explicit contingency table.
inline double nmi_value(const std::vector<std::size_t>& a, const std::vector<int>& l) {
  const double n = static_cast<double>(a.size());
  std::map<std::size_t, std::map<int, std::size_t>> table;
  std::map<std::size_t, std::size_t> ca;
  std::map<int, std::size_t> cl;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[a[i]][l[i]]++;
    ca[a[i]]++;
    cl[l[i]]++;
  }
  double ha = 0.0, hl = 0.0, mi = 0.0;
  for (const auto& [k, c] : ca) {
    const double p = c / n;
    ha -= p * std::log(p);
  }
  for (const auto& [k, c] : cl) {
    const double p = c / n;
    hl -= p * std::log(p);
  }
  for (const auto& [ak, row] : table)
    for (const auto& [lk, c] : row) {
      const double pj = c / n;
      mi += pj * std::log(pj * n * n / (static_cast<double>(ca[ak]) * cl[lk]));
    }
  if (ha == 0.0 && hl == 0.0) return 1.0;
  if (ha == 0.0 || hl == 0.0) return 0.0;
  return mi / (0.5 * (ha + hl));
}

}  // namespace oracle
