#pragma once

#include <cstddef>
#include <vector>

#include "kickgen/common/rng.hpp"

namespace kickgen::analysis {

/// Row-major point set: n points of dimension d.
struct PointSet {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> data;

  PointSet() = default;
  PointSet(std::size_t n_, std::size_t d_) : n(n_), d(d_), data(n_ * d_, 0.0) {}
  const double* point(std::size_t i) const { return data.data() + i * d; }
  double* point(std::size_t i) { return data.data() + i * d; }
};

struct Clustering {
  int k = 0;
  std::vector<double> centroids;   // k x d, row-major
  std::vector<int> assignment;     // per point
  std::vector<std::size_t> sizes;  // per cluster
  double inertia = 0.0;

  const double* centroid(std::size_t i) const { return centroids.data() + i * d; }
  std::size_t d = 0;
};

/// Lloyd's algorithm with k-means++ seeding, Euclidean metric, 10 restarts
/// (best inertia kept, first-seen wins ties), 300-iteration cap per restart.
/// Throws if there are fewer than k distinct points.
Clustering kmeans(const PointSet& points, int k, Rng& rng);

/// DB = (1/k) sum_i max_{j != i} (S_i + S_j) / M_ij, with S_i the mean
/// distance of cluster-i members to their centroid and M_ij the centroid
/// distance. Throws on empty clusters or coincident centroids.
double davies_bouldin(const PointSet& points, const Clustering& clustering);

/// Smallest-DB model selection over k in [k_min, k_max]; ties break toward
/// smaller k. Values of k that cannot be clustered (too few distinct
/// points) are skipped.
std::pair<int, Clustering> select_k(const PointSet& points, int k_min,
                                    int k_max, Rng& rng);

}  // namespace kickgen::analysis
