#include "dml/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "dml/density.hpp"
#include "dml/errors.hpp"
#include "dml/rng.hpp"

namespace dml {

std::map<std::size_t, double> recall_at_k(const Matrix& embeddings,
                                          const std::vector<int>& labels,
                                          const std::vector<std::size_t>& ks) {
  const std::size_t n = embeddings.rows;
  if (n != labels.size()) throw LengthMismatch("recall_at_k: rows vs labels");
  std::map<std::size_t, double> hits;
  for (std::size_t k : ks) hits[k] = 0.0;
  if (n < 2 || ks.empty()) return hits;

  std::vector<std::pair<double, std::size_t>> order(n - 1);
  for (std::size_t q = 0; q < n; ++q) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      order[m++] = {sq_euclidean(embeddings.row(q), embeddings.row(j)), j};
    }
    std::sort(order.begin(), order.end());  // ties fall back to ascending index
    std::size_t first_same = n;  // rank of first same-class neighbor
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (labels[order[r].second] == labels[q]) {
        first_same = r;
        break;
      }
    }
    for (std::size_t k : ks)
      if (first_same < k) hits[k] += 1.0;
  }
  for (auto& [k, h] : hits) h /= static_cast<double>(n);
  return hits;
}

namespace {

std::size_t nearest_centroid(std::span<const double> p, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double d = sq_euclidean(p, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// k-means++: first center uniform, then proportional to squared
// distance to the nearest chosen center.
Matrix kmeanspp_init(const Matrix& points, std::size_t k, Rng& rng) {
  Matrix centroids(k, points.cols);
  std::vector<double> d2(points.rows, std::numeric_limits<double>::infinity());
  std::size_t first = uniform_index(rng, points.rows);
  std::copy(points.row(first).begin(), points.row(first).end(),
            centroids.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i) {
      d2[i] = std::min(d2[i], sq_euclidean(points.row(i), centroids.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform_unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < points.rows; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, points.rows);
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(),
              centroids.row(c).begin());
  }
  return centroids;
}

struct LloydResult {
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
};

LloydResult lloyd(const Matrix& points, std::size_t k, Rng& rng) {
  Matrix centroids = kmeanspp_init(points, k, rng);
  const std::size_t n = points.rows;
  std::vector<std::size_t> assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest_centroid(points.row(i), centroids);
      if (c != assign[i]) changed = true;
      assign[i] = c;
    }
    if (!changed) break;

    std::vector<std::size_t> counts(k, 0);
    centroids.values.assign(centroids.values.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto cr = centroids.row(assign[i]);
      auto pr = points.row(i);
      for (std::size_t d = 0; d < points.cols; ++d) cr[d] += pr[d];
      counts[assign[i]]++;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (double& x : centroids.row(c)) x /= static_cast<double>(counts[c]);
    }
    // Re-seed each empty cluster from the point farthest from its
    // current centroid (lowest index on ties).
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = sq_euclidean(points.row(i), centroids.row(assign[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      std::copy(points.row(far).begin(), points.row(far).end(),
                centroids.row(c).begin());
    }
  }
  LloydResult res;
  res.assignments = std::move(assign);
  for (std::size_t i = 0; i < n; ++i)
    res.inertia += sq_euclidean(points.row(i), centroids.row(res.assignments[i]));
  return res;
}

}  // namespace

std::vector<std::size_t> kmeans(const Matrix& embeddings, std::size_t num_clusters,
                                std::uint64_t seed) {
  if (num_clusters == 0 || num_clusters > embeddings.rows)
    throw TooFewPoints("kmeans: " + std::to_string(embeddings.rows) +
                       " points for " + std::to_string(num_clusters) + " clusters");
  constexpr int kRestarts = 8;
  LloydResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kRestarts; ++r) {
    Rng rng(seed + static_cast<std::uint64_t>(r) * 0x9E3779B97F4A7C15ull);
    LloydResult res = lloyd(embeddings, num_clusters, rng);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best.assignments;
}

double nmi(const std::vector<std::size_t>& assignments, const std::vector<int>& labels) {
  if (assignments.size() != labels.size() || assignments.empty())
    throw LengthMismatch("nmi: assignment/label lengths differ or empty");
  const double n = static_cast<double>(assignments.size());

  std::map<std::size_t, double> pa;
  std::map<int, double> pl;
  std::map<std::pair<std::size_t, int>, double> joint;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    pa[assignments[i]] += 1.0;
    pl[labels[i]] += 1.0;
    joint[{assignments[i], labels[i]}] += 1.0;
  }
  double ha = 0.0, hl = 0.0, mi = 0.0;
  for (auto& [a, c] : pa) {
    c /= n;
    ha -= c * std::log(c);
  }
  for (auto& [l, c] : pl) {
    c /= n;
    hl -= c * std::log(c);
  }
  for (auto& [al, c] : joint) {
    c /= n;
    mi += c * std::log(c / (pa[al.first] * pl[al.second]));
  }
  if (ha == 0.0 && hl == 0.0) return 1.0;
  if (ha == 0.0 || hl == 0.0) return 0.0;
  return mi / (0.5 * (ha + hl));
}

std::map<int, double> density_report(const Matrix& embeddings,
                                     const std::vector<int>& labels) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < labels.size(); ++r) by_class[labels[r]].push_back(r);
  std::map<int, double> out;
  for (const auto& [cls, rows] : by_class) {
    if (rows.size() < 2) continue;
    Matrix sub(rows.size(), embeddings.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto src = embeddings.row(rows[i]);
      std::copy(src.begin(), src.end(), sub.row(i).begin());
    }
    out[cls] = avg_intra_distance(sub).d_avg;
  }
  return out;
}

EvalReport evaluate(const Matrix& embeddings, const std::vector<int>& labels,
                    const std::vector<std::size_t>& ks, std::uint64_t seed) {
  EvalReport report;
  report.num_queries = embeddings.rows;
  report.recall_at = recall_at_k(embeddings, labels, ks);
  const std::size_t num_classes = std::set<int>(labels.begin(), labels.end()).size();
  report.nmi = nmi(kmeans(embeddings, num_classes, seed), labels);
  report.per_class_density = density_report(embeddings, labels);
  return report;
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << "queries: " << num_queries << "\n";
  os << "NMI: " << nmi << "\n";
  for (const auto& [k, r] : recall_at) os << "R@" << k << ": " << r << "\n";
  double mean_density = 0.0;
  for (const auto& [cls, d] : per_class_density) mean_density += d;
  if (!per_class_density.empty())
    mean_density /= static_cast<double>(per_class_density.size());
  os << "mean class density: " << mean_density << " over "
     << per_class_density.size() << " classes\n";
  return os.str();
}

std::string EvalReport::to_records() const {
  std::ostringstream os;
  os.precision(17);
  os << "num_queries=" << num_queries << "\n";
  os << "nmi=" << nmi << "\n";
  for (const auto& [k, r] : recall_at) os << "recall@" << k << "=" << r << "\n";
  for (const auto& [cls, d] : per_class_density)
    os << "density." << cls << "=" << d << "\n";
  return os.str();
}

}  // namespace dml
