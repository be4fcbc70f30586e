#pragma once

#include <map>
#include <vector>

#include "dml/linalg.hpp"
#include "dml/losses.hpp"

namespace dml {

// Learnable per-class target densities plus the cached original
// densities of the input features. alphas are updated by the optimizer
// between batches; everything else is fixed for a run.
struct DensityState {
  std::map<int, double> alphas;  // target density per class, >= 0
  std::map<int, double> d0;      // original avg intra-class distance per class
  double eta = 0.5;              // exponent controlling d0's influence
  double lambda = 10.0;          // tradeoff weight in the joint objective
  // When true, sums are normalized by the number of covered classes
  // instead of the number of classes present in the batch.
  bool global_class_normalization = false;

  bool operator==(const DensityState&) const = default;
};

struct ClassDensity {
  int class_id = 0;
  Vector centroid;
  double d_avg = 0.0;
  std::size_t count = 0;
};

// Mean of the rows; not re-normalized to unit length.
Vector class_centroid(const Matrix& embeddings_of_class);

// Mean squared distance of rows to their centroid.
ClassDensity avg_intra_distance(const Matrix& embeddings_of_class);

// Original densities, computed once over the full training set per
// class before training.
std::map<int, double> compute_d0(const std::map<int, Matrix>& features_by_class);

struct RegularizerResult {
  double value = 0.0;
  Matrix d_embeddings;
  std::map<int, double> d_alpha;  // zero for classes absent from the batch
};

// Density-adaptivity regularizer over the classes present in the batch
// with >= 2 samples:
//   (1/C) sum_c (D_avg(c) - alpha_c)^2 - (1/C) sum_c alpha_c
//   + (1/C^2) sum_{ci,cj} (d0_cj^eta * alpha_ci - d0_ci^eta * alpha_cj)^2
// Singleton classes are skipped; d0 is floored at 1e-6 before
// exponentiation (a zero-spread class would zero out the penalty
// weights asymmetrically).
RegularizerResult density_regularizer(const Matrix& batch_embeddings,
                                      const std::vector<int>& batch_labels,
                                      const DensityState& state);

struct JointObjective {
  double value = 0.0;
  Matrix d_embeddings;
  std::map<int, double> d_alpha;
};

// base + lambda * regularizer, gradients combined likewise.
JointObjective joint_objective(const LossGradients& base,
                               const RegularizerResult& reg, double lambda);

}  // namespace dml
