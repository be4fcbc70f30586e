#include "dml/losses.hpp"

#include <algorithm>
#include <cmath>

#include "dml/errors.hpp"

namespace dml {

namespace {

// Accumulates s * (e_i - e_j) into grad rows i (+) and j (-).
void add_pair_grad(Matrix& grad, const Matrix& emb, std::size_t i, std::size_t j,
                   double s) {
  auto ei = emb.row(i);
  auto ej = emb.row(j);
  auto gi = grad.row(i);
  auto gj = grad.row(j);
  for (std::size_t k = 0; k < emb.cols; ++k) {
    const double d = s * (ei[k] - ej[k]);
    gi[k] += d;
    gj[k] -= d;
  }
}

}  // namespace

LossGradients contrastive_loss(const Matrix& embeddings, const PairSet& pairs,
                               double margin) {
  if (pairs.positives.empty() && pairs.negatives.empty()) throw EmptyPairSet();
  LossGradients out;
  out.d_embeddings = Matrix(embeddings.rows, embeddings.cols);
  for (auto [i, j] : pairs.positives) {
    out.value += sq_euclidean(embeddings.row(i), embeddings.row(j));
    add_pair_grad(out.d_embeddings, embeddings, i, j, 2.0);
  }
  for (auto [i, j] : pairs.negatives) {
    const double d = sq_euclidean(embeddings.row(i), embeddings.row(j));
    if (d < margin) {
      out.value += margin - d;
      add_pair_grad(out.d_embeddings, embeddings, i, j, -2.0);
    }
  }
  return out;
}

LossGradients triplet_loss(const Matrix& embeddings, const TripletSet& triplets,
                           double margin) {
  if (triplets.triplets.empty()) throw EmptyTripletSet();
  LossGradients out;
  out.d_embeddings = Matrix(embeddings.rows, embeddings.cols);
  for (const Triplet& t : triplets.triplets) {
    const double dp = sq_euclidean(embeddings.row(t.anchor), embeddings.row(t.positive));
    const double dn = sq_euclidean(embeddings.row(t.anchor), embeddings.row(t.negative));
    const double term = margin + dp - dn;
    if (term > 0.0) {
      out.value += term;
      add_pair_grad(out.d_embeddings, embeddings, t.anchor, t.positive, 2.0);
      add_pair_grad(out.d_embeddings, embeddings, t.anchor, t.negative, -2.0);
    }
  }
  return out;
}

LossGradients npair_loss(const Matrix& embeddings, const TupletSet& tuplets) {
  if (tuplets.tuplets.empty()) throw EmptyTupletSet();
  LossGradients out;
  out.d_embeddings = Matrix(embeddings.rows, embeddings.cols);
  const std::size_t d = embeddings.cols;
  for (const Tuplet& t : tuplets.tuplets) {
    auto a = embeddings.row(t.anchor);
    auto p = embeddings.row(t.positive);
    const double ap = dot(a, p);
    std::vector<double> s(t.negatives.size());
    for (std::size_t c = 0; c < t.negatives.size(); ++c)
      s[c] = dot(a, embeddings.row(t.negatives[c])) - ap;

    // log(1 + sum exp(s_c)) = M + log(exp(-M) + sum exp(s_c - M)), M >= 0
    const double m = std::max(0.0, *std::max_element(s.begin(), s.end()));
    double z = std::exp(-m);
    for (double sc : s) z += std::exp(sc - m);
    out.value += m + std::log(z);

    // softmax weights w_c = exp(s_c) / (1 + sum exp(s_k))
    auto ga = out.d_embeddings.row(t.anchor);
    auto gp = out.d_embeddings.row(t.positive);
    double wsum = 0.0;
    for (std::size_t c = 0; c < t.negatives.size(); ++c) {
      const double w = std::exp(s[c] - m) / z;
      wsum += w;
      auto n = embeddings.row(t.negatives[c]);
      auto gn = out.d_embeddings.row(t.negatives[c]);
      for (std::size_t k = 0; k < d; ++k) {
        ga[k] += w * (n[k] - p[k]);
        gn[k] += w * a[k];
      }
    }
    for (std::size_t k = 0; k < d; ++k) gp[k] -= wsum * a[k];
  }
  return out;
}

}  // namespace dml
