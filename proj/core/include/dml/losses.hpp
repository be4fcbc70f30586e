#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "dml/linalg.hpp"

namespace dml {

// Index sets mined from a batch. Invariants (label agreement, index
// bounds, no degenerate entries) are established by the sampler.
struct PairSet {
  std::vector<std::pair<std::size_t, std::size_t>> positives;
  std::vector<std::pair<std::size_t, std::size_t>> negatives;
};

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
};
struct TripletSet {
  std::vector<Triplet> triplets;
};

struct Tuplet {
  std::size_t anchor;
  std::size_t positive;
  std::vector<std::size_t> negatives;  // one per other class
};
struct TupletSet {
  std::vector<Tuplet> tuplets;
};

// Loss value plus gradient w.r.t. every embedding row. Gradients
// accumulate additively since one row can appear in many terms.
struct LossGradients {
  double value = 0.0;
  Matrix d_embeddings;
};

// Sum over positives of D(i,j) plus hinge max(0, m_p - D(i,j)) over
// negatives. Subgradient 0 at the hinge boundary.
LossGradients contrastive_loss(const Matrix& embeddings, const PairSet& pairs,
                               double margin);

// Sum of max(0, m_t + D(anchor,pos) - D(anchor,neg)) over triplets.
LossGradients triplet_loss(const Matrix& embeddings, const TripletSet& triplets,
                           double margin);

// Sum per tuplet of log(1 + sum_c exp(a.n_c - a.p)), evaluated with a
// max-shifted log-sum-exp.
LossGradients npair_loss(const Matrix& embeddings, const TupletSet& tuplets);

}  // namespace dml
