#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dml/linalg.hpp"

namespace dml {

struct EvalReport {
  std::map<std::size_t, double> recall_at;     // K -> score in [0,1]
  double nmi = 0.0;
  std::map<int, double> per_class_density;     // class -> D_avg
  std::size_t num_queries = 0;

  std::string to_table() const;      // human-readable
  std::string to_records() const;    // key=value lines
};

// Fraction of queries with a same-class neighbor among the K nearest
// (self excluded, ties broken by ascending row index). Singleton-class
// queries count as failures at every K.
std::map<std::size_t, double> recall_at_k(const Matrix& embeddings,
                                          const std::vector<int>& labels,
                                          const std::vector<std::size_t>& ks);

// Lloyd's algorithm with k-means++ seeding, 100-iteration cap, 8
// restarts; best inertia wins, ties by restart index. Empty clusters
// are re-seeded from the point farthest from its assigned centroid.
std::vector<std::size_t> kmeans(const Matrix& embeddings, std::size_t num_clusters,
                                std::uint64_t seed);

// I(A;L) / ((H(A)+H(L))/2), natural logs. Both-degenerate partitions
// score 1.0; exactly one degenerate scores 0.0.
double nmi(const std::vector<std::size_t>& assignments, const std::vector<int>& labels);

// Per-class D_avg; classes with a single sample are omitted.
std::map<int, double> density_report(const Matrix& embeddings,
                                     const std::vector<int>& labels);

EvalReport evaluate(const Matrix& embeddings, const std::vector<int>& labels,
                    const std::vector<std::size_t>& ks, std::uint64_t seed);

}  // namespace dml
