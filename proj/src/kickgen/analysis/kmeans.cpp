#include "kickgen/analysis/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kickgen::analysis {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

std::size_t count_distinct(const PointSet& points, std::size_t limit) {
  std::vector<const double*> seen;
  for (std::size_t i = 0; i < points.n && seen.size() < limit; ++i) {
    const double* p = points.point(i);
    bool is_new = true;
    for (const double* q : seen) {
      if (sq_dist(p, q, points.d) == 0.0) {
        is_new = false;
        break;
      }
    }
    if (is_new) seen.push_back(p);
  }
  return seen.size();
}

std::vector<double> seed_plus_plus(const PointSet& points, int k, Rng& rng) {
  const std::size_t n = points.n, d = points.d;
  std::vector<double> centroids(static_cast<std::size_t>(k) * d);
  const auto first =
      static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
  std::copy_n(points.point(first), d, centroids.begin());

  std::vector<double> best(n);
  for (std::size_t i = 0; i < n; ++i) {
    best[i] = sq_dist(points.point(i), centroids.data(), d);
  }
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double w : best) total += w;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += best[i];
        if (acc >= target && best[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      // all points coincide with chosen centroids; caller prevents this
      pick = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    }
    double* dst = centroids.data() + static_cast<std::size_t>(c) * d;
    std::copy_n(points.point(pick), d, dst);
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(points.point(i), dst, d));
    }
  }
  return centroids;
}

struct LloydResult {
  std::vector<double> centroids;
  std::vector<int> assignment;
  std::vector<std::size_t> sizes;
  double inertia = 0.0;
};

LloydResult lloyd(const PointSet& points, int k, std::vector<double> centroids,
                  int max_iter) {
  const std::size_t n = points.n, d = points.d;
  const auto uk = static_cast<std::size_t>(k);
  LloydResult res;
  res.centroids = std::move(centroids);
  res.assignment.assign(n, -1);
  res.sizes.assign(uk, 0);

  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    std::fill(res.sizes.begin(), res.sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < uk; ++c) {
        const double dist =
            sq_dist(points.point(i), res.centroids.data() + c * d, d);
        if (dist < best_d) {
          best_d = dist;
          best_c = static_cast<int>(c);
        }
      }
      if (res.assignment[i] != best_c) changed = true;
      res.assignment[i] = best_c;
      ++res.sizes[static_cast<std::size_t>(best_c)];
    }

    // empty clusters grab the point farthest from its centroid
    for (std::size_t c = 0; c < uk; ++c) {
      if (res.sizes[c] > 0) continue;
      std::size_t far_i = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto a = static_cast<std::size_t>(res.assignment[i]);
        if (res.sizes[a] <= 1) continue;
        const double dist =
            sq_dist(points.point(i), res.centroids.data() + a * d, d);
        if (dist > far_d) {
          far_d = dist;
          far_i = i;
        }
      }
      --res.sizes[static_cast<std::size_t>(res.assignment[far_i])];
      res.assignment[far_i] = static_cast<int>(c);
      ++res.sizes[c];
      changed = true;
    }

    std::fill(res.centroids.begin(), res.centroids.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(res.assignment[i]);
      double* dst = res.centroids.data() + c * d;
      const double* p = points.point(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] += p[j];
    }
    for (std::size_t c = 0; c < uk; ++c) {
      double* dst = res.centroids.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) {
        dst[j] /= static_cast<double>(res.sizes[c]);
      }
    }
    if (!changed) break;
  }

  res.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res.inertia += sq_dist(points.point(i),
                           res.centroids.data() +
                               static_cast<std::size_t>(res.assignment[i]) * d,
                           d);
  }
  return res;
}

}  // namespace

Clustering kmeans(const PointSet& points, int k, Rng& rng) {
  if (k < 2) throw std::invalid_argument("kmeans: k must be >= 2");
  if (points.n < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("kmeans: fewer points than clusters");
  }
  if (points.d == 0) throw std::invalid_argument("kmeans: zero-dimension points");
  if (count_distinct(points, static_cast<std::size_t>(k)) <
      static_cast<std::size_t>(k)) {
    throw std::invalid_argument(
        "kmeans: degenerate input, fewer distinct points than clusters");
  }

  constexpr int kRestarts = 10;
  constexpr int kMaxIter = 300;
  LloydResult best;
  bool have = false;
  for (int r = 0; r < kRestarts; ++r) {
    auto res = lloyd(points, k, seed_plus_plus(points, k, rng), kMaxIter);
    if (!have || res.inertia < best.inertia) {
      best = std::move(res);
      have = true;
    }
  }

  Clustering out;
  out.k = k;
  out.d = points.d;
  out.centroids = std::move(best.centroids);
  out.assignment = std::move(best.assignment);
  out.sizes = std::move(best.sizes);
  out.inertia = best.inertia;
  return out;
}

double davies_bouldin(const PointSet& points, const Clustering& clustering) {
  const auto k = static_cast<std::size_t>(clustering.k);
  const std::size_t d = points.d;
  std::vector<double> scatter(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (clustering.sizes[c] == 0) {
      throw std::invalid_argument("davies_bouldin: empty cluster");
    }
  }
  for (std::size_t i = 0; i < points.n; ++i) {
    const auto c = static_cast<std::size_t>(clustering.assignment[i]);
    scatter[c] += std::sqrt(sq_dist(points.point(i), clustering.centroid(c), d));
  }
  for (std::size_t c = 0; c < k; ++c) {
    scatter[c] /= static_cast<double>(clustering.sizes[c]);
  }

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double sep =
          std::sqrt(sq_dist(clustering.centroid(i), clustering.centroid(j), d));
      if (sep == 0.0) {
        throw std::invalid_argument("davies_bouldin: coincident centroids");
      }
      worst = std::max(worst, (scatter[i] + scatter[j]) / sep);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

std::pair<int, Clustering> select_k(const PointSet& points, int k_min,
                                    int k_max, Rng& rng) {
  if (k_min > k_max) throw std::invalid_argument("select_k: empty range");
  int best_k = -1;
  double best_db = std::numeric_limits<double>::infinity();
  Clustering best;
  for (int k = k_min; k <= k_max; ++k) {
    if (points.n < static_cast<std::size_t>(k)) break;
    try {
      Clustering c = kmeans(points, k, rng);
      const double db = davies_bouldin(points, c);
      if (db < best_db) {  // strict: ties keep the smaller k
        best_db = db;
        best_k = k;
        best = std::move(c);
      }
    } catch (const std::invalid_argument&) {
      continue;  // not clusterable at this k
    }
  }
  if (best_k < 0) {
    throw std::invalid_argument("select_k: no k in range is clusterable");
  }
  return {best_k, std::move(best)};
}

}  // namespace kickgen::analysis
