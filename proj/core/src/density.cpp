#include "dml/density.hpp"

#include <cmath>

#include "dml/errors.hpp"

namespace dml {

namespace {
constexpr double kD0Floor = 1e-6;
}

Vector class_centroid(const Matrix& embeddings_of_class) {
  if (embeddings_of_class.rows == 0) throw EmptyClass();
  Vector mu(embeddings_of_class.cols, 0.0);
  for (std::size_t r = 0; r < embeddings_of_class.rows; ++r) {
    auto row = embeddings_of_class.row(r);
    for (std::size_t c = 0; c < mu.size(); ++c) mu[c] += row[c];
  }
  for (double& x : mu) x /= static_cast<double>(embeddings_of_class.rows);
  return mu;
}

ClassDensity avg_intra_distance(const Matrix& embeddings_of_class) {
  ClassDensity out;
  out.centroid = class_centroid(embeddings_of_class);
  out.count = embeddings_of_class.rows;
  double s = 0.0;
  for (std::size_t r = 0; r < embeddings_of_class.rows; ++r)
    s += sq_euclidean(embeddings_of_class.row(r), out.centroid);
  out.d_avg = s / static_cast<double>(out.count);
  return out;
}

std::map<int, double> compute_d0(const std::map<int, Matrix>& features_by_class) {
  std::map<int, double> d0;
  for (const auto& [cls, feats] : features_by_class)
    d0[cls] = avg_intra_distance(feats).d_avg;
  return d0;
}

RegularizerResult density_regularizer(const Matrix& batch_embeddings,
                                      const std::vector<int>& batch_labels,
                                      const DensityState& state) {
  // Group batch rows by class, keeping only classes with >= 2 samples.
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < batch_labels.size(); ++r) {
    if (!state.alphas.contains(batch_labels[r])) throw UnknownClass(batch_labels[r]);
    by_class[batch_labels[r]].push_back(r);
  }
  std::vector<int> classes;
  for (const auto& [cls, rows] : by_class)
    if (rows.size() >= 2) classes.push_back(cls);
  if (classes.empty()) throw AllSingletonClasses();

  const double cb = state.global_class_normalization
                        ? static_cast<double>(state.alphas.size())
                        : static_cast<double>(classes.size());

  RegularizerResult out;
  out.d_embeddings = Matrix(batch_embeddings.rows, batch_embeddings.cols);
  for (const auto& [cls, a] : state.alphas) out.d_alpha[cls] = 0.0;

  std::map<int, double> d_avg;
  std::map<int, Vector> centroid;
  for (int cls : classes) {
    const auto& rows = by_class[cls];
    Matrix sub(rows.size(), batch_embeddings.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto src = batch_embeddings.row(rows[i]);
      std::copy(src.begin(), src.end(), sub.row(i).begin());
    }
    ClassDensity cd = avg_intra_distance(sub);
    d_avg[cls] = cd.d_avg;
    centroid[cls] = std::move(cd.centroid);
  }

  // (1/C) sum (D_avg - alpha)^2 - (1/C) sum alpha.
  for (int cls : classes) {
    const double alpha = state.alphas.at(cls);
    const double diff = d_avg[cls] - alpha;
    out.value += (diff * diff - alpha) / cb;
    out.d_alpha[cls] += (-2.0 * diff - 1.0) / cb;

    // dD_avg/de_i = (2/n)(e_i - mu); the centroid coupling terms cancel
    // because sum_i (e_i - mu) = 0.
    const auto& rows = by_class[cls];
    const double n = static_cast<double>(rows.size());
    const double coef = (2.0 * diff / cb) * (2.0 / n);
    const Vector& mu = centroid[cls];
    for (std::size_t r : rows) {
      auto e = batch_embeddings.row(r);
      auto g = out.d_embeddings.row(r);
      for (std::size_t k = 0; k < mu.size(); ++k) g[k] += coef * (e[k] - mu[k]);
    }
  }

  // Soft inter-class correlation penalty, double sum over ordered pairs.
  std::map<int, double> w;
  for (int cls : classes)
    w[cls] = std::pow(std::max(state.d0.at(cls), kD0Floor), state.eta);
  const double cb2 = cb * cb;
  for (int ci : classes) {
    for (int cj : classes) {
      const double t = w[cj] * state.alphas.at(ci) - w[ci] * state.alphas.at(cj);
      out.value += t * t / cb2;
      out.d_alpha[ci] += 2.0 * t * w[cj] / cb2;
      out.d_alpha[cj] -= 2.0 * t * w[ci] / cb2;
    }
  }
  return out;
}

JointObjective joint_objective(const LossGradients& base,
                               const RegularizerResult& reg, double lambda) {
  if (base.d_embeddings.rows != reg.d_embeddings.rows ||
      base.d_embeddings.cols != reg.d_embeddings.cols)
    throw DimMismatch("joint_objective: gradient shapes disagree");
  JointObjective out;
  out.value = base.value + lambda * reg.value;
  out.d_embeddings = base.d_embeddings;
  for (std::size_t i = 0; i < out.d_embeddings.values.size(); ++i)
    out.d_embeddings.values[i] += lambda * reg.d_embeddings.values[i];
  for (const auto& [cls, g] : reg.d_alpha) out.d_alpha[cls] = lambda * g;
  return out;
}

}  // namespace dml
