#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kickgen/analysis/kmeans.hpp"
#include "kickgen/analysis/transfer.hpp"
#include "kickgen/cgae/model.hpp"
#include "support/oracles.hpp"

using namespace kickgen;
using namespace kickgen::analysis;

namespace {

PointSet blobs(const std::vector<std::vector<double>>& centers,
               std::size_t per_blob, double spread, Rng& rng,
               std::vector<int>* labels = nullptr) {
  const std::size_t d = centers.front().size();
  PointSet points(centers.size() * per_blob, d);
  std::size_t row = 0;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t i = 0; i < per_blob; ++i, ++row) {
      for (std::size_t j = 0; j < d; ++j) {
        points.point(row)[j] = centers[c][j] + spread * rng.normal();
      }
      if (labels) labels->push_back(static_cast<int>(c));
    }
  }
  return points;
}

double sq_dist(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
  return acc;
}

}  // namespace

TEST_CASE("kmeans separates two well-separated blobs") {
  Rng rng(1);
  const std::vector<std::vector<double>> centers = {{0.0, 0.0}, {10.0, 10.0}};
  const auto points = blobs(centers, 40, 0.1, rng);
  Rng krng(2);
  const auto clustering = kmeans(points, 2, krng);

  // each blob maps to one cluster and centroids match the blob means
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(clustering.sizes[c] == 40);
  }
  for (const auto& center : centers) {
    double best = 1e30;
    for (std::size_t c = 0; c < 2; ++c) {
      // empirical blob mean, not the nominal center
      double mean[2] = {0, 0};
      int count = 0;
      for (std::size_t i = 0; i < points.n; ++i) {
        if (clustering.assignment[i] != static_cast<int>(c)) continue;
        mean[0] += points.point(i)[0];
        mean[1] += points.point(i)[1];
        ++count;
      }
      mean[0] /= count;
      mean[1] /= count;
      const double to_center = sq_dist(mean, center.data(), 2);
      if (to_center < 1.0) {
        best = sq_dist(clustering.centroid(c), mean, 2);
      }
    }
    CHECK(best < 1e-12);  // centroid equals its blob mean
  }
}

TEST_CASE("kmeans gives zero inertia when points equal k distinct values") {
  PointSet points(9, 2);
  for (std::size_t i = 0; i < 9; ++i) {
    points.point(i)[0] = static_cast<double>(i % 3);
    points.point(i)[1] = 2.0 * static_cast<double>(i % 3);
  }
  Rng rng(3);
  const auto clustering = kmeans(points, 3, rng);
  CHECK(clustering.inertia == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("kmeans is deterministic under a fixed seed and rejects degenerate input") {
  Rng rng(4);
  const auto points = blobs({{0, 0}, {5, 5}, {-4, 3}}, 20, 0.5, rng);
  Rng a(5), b(5);
  const auto c1 = kmeans(points, 3, a);
  const auto c2 = kmeans(points, 3, b);
  CHECK(c1.assignment == c2.assignment);
  CHECK(c1.centroids == c2.centroids);
  CHECK(c1.inertia == c2.inertia);

  PointSet same(5, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    same.point(i)[0] = 1.0;
    same.point(i)[1] = 2.0;
  }
  Rng c(6);
  CHECK_THROWS_WITH_AS(kmeans(same, 2, c), doctest::Contains("degenerate"),
                       std::invalid_argument);
  CHECK_THROWS_AS(kmeans(points, 1, c), std::invalid_argument);
}

TEST_CASE("kmeans inertia equals its direct recomputation") {
  Rng rng(7);
  const auto points = blobs({{0, 0, 0}, {3, 1, -2}, {-1, 4, 2}}, 15, 0.8, rng);
  Rng krng(8);
  const auto clustering = kmeans(points, 3, krng);
  double want = 0.0;
  for (std::size_t i = 0; i < points.n; ++i) {
    want += sq_dist(points.point(i),
                    clustering.centroid(
                        static_cast<std::size_t>(clustering.assignment[i])),
                    3);
  }
  CHECK(clustering.inertia == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("davies_bouldin frozen example: two tight pairs") {
  PointSet points(4, 2);
  points.point(0)[0] = 0;  points.point(0)[1] = 0;
  points.point(1)[0] = 0;  points.point(1)[1] = 1;
  points.point(2)[0] = 10; points.point(2)[1] = 0;
  points.point(3)[0] = 10; points.point(3)[1] = 1;
  Clustering clustering;
  clustering.k = 2;
  clustering.d = 2;
  clustering.centroids = {0, 0.5, 10, 0.5};
  clustering.assignment = {0, 0, 1, 1};
  clustering.sizes = {2, 2};
  CHECK(davies_bouldin(points, clustering) ==
        doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("davies_bouldin is zero for singleton clusters") {
  PointSet points(3, 1);
  points.point(0)[0] = 0;
  points.point(1)[0] = 5;
  points.point(2)[0] = 9;
  Clustering clustering;
  clustering.k = 3;
  clustering.d = 1;
  clustering.centroids = {0, 5, 9};
  clustering.assignment = {0, 1, 2};
  clustering.sizes = {1, 1, 1};
  CHECK(davies_bouldin(points, clustering) == 0.0);
}

TEST_CASE("davies_bouldin matches the direct-formula oracle") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_int(0, 1));
    const std::size_t n =
        static_cast<std::size_t>(k) + static_cast<std::size_t>(rng.uniform_int(2, 12 - k));
    const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
    PointSet points(n, d);
    for (auto& v : points.data) v = rng.normal() * 3.0;

    // random assignment with every cluster non-empty
    std::vector<int> assignment(n);
    for (std::size_t i = 0; i < n; ++i) {
      assignment[i] = static_cast<int>(rng.uniform_int(0, k - 1));
    }
    for (int c = 0; c < k; ++c) assignment[static_cast<std::size_t>(c)] = c;

    Clustering clustering;
    clustering.k = k;
    clustering.d = d;
    clustering.assignment = assignment;
    clustering.sizes.assign(static_cast<std::size_t>(k), 0);
    clustering.centroids.assign(static_cast<std::size_t>(k) * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assignment[i]);
      ++clustering.sizes[c];
      for (std::size_t j = 0; j < d; ++j) {
        clustering.centroids[c * d + j] += points.point(i)[j];
      }
    }
    for (int c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        clustering.centroids[static_cast<std::size_t>(c) * d + j] /=
            static_cast<double>(clustering.sizes[static_cast<std::size_t>(c)]);
      }
    }

    std::vector<std::vector<double>> point_rows;
    for (std::size_t i = 0; i < n; ++i) {
      point_rows.emplace_back(points.point(i), points.point(i) + d);
    }
    const double want = oracles::davies_bouldin_direct(point_rows, assignment, k);
    CHECK(davies_bouldin(points, clustering) ==
          doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("davies_bouldin rejects empty clusters and coincident centroids") {
  PointSet points(2, 1);
  points.point(0)[0] = 0;
  points.point(1)[0] = 1;
  Clustering clustering;
  clustering.k = 2;
  clustering.d = 1;
  clustering.centroids = {0.5, 0.5};
  clustering.assignment = {0, 0};
  clustering.sizes = {2, 0};
  CHECK_THROWS_WITH_AS(davies_bouldin(points, clustering),
                       doctest::Contains("empty"), std::invalid_argument);
  clustering.assignment = {0, 1};
  clustering.sizes = {1, 1};
  CHECK_THROWS_WITH_AS(davies_bouldin(points, clustering),
                       doctest::Contains("coincident"), std::invalid_argument);
}

TEST_CASE("select_k recovers the construction count of separated blobs") {
  Rng rng(10);
  {
    const auto points =
        blobs({{0, 0}, {8, 0}, {0, 8}, {8, 8}, {-8, 4}, {4, -8}}, 25, 0.3, rng);
    Rng krng(11);
    const auto [k, clustering] = select_k(points, 2, 10, krng);
    CHECK(k == 6);
  }
  {
    const auto points = blobs({{0, 0}, {9, 9}}, 30, 0.4, rng);
    Rng krng(12);
    const auto [k, clustering] = select_k(points, 2, 10, krng);
    CHECK(k == 2);
  }
  Rng krng(13);
  PointSet points(4, 1);
  CHECK_THROWS_AS(select_k(points, 5, 4, krng), std::invalid_argument);
}

TEST_CASE("dominant_code of a time-constant series is that vector") {
  cgae::MappingCodes m(4, 12);
  const std::vector<double> code = {0.5, -1.0, 2.0, 0.25};
  for (std::size_t q = 0; q < 4; ++q) {
    for (std::size_t t = 0; t < 12; ++t) m.at(q, t) = code[q];
  }
  Rng rng(14);
  const auto out = dominant_code(m, rng);
  REQUIRE(out.size() == 4);
  for (std::size_t q = 0; q < 4; ++q) {
    CHECK(out[q] == doctest::Approx(code[q]).epsilon(1e-6));
  }
}

TEST_CASE("dominant_code returns the 70% mode of a two-mode series") {
  Rng rng(15);
  const std::vector<double> a = {2.0, -1.0, 0.5, 3.0};
  const std::vector<double> b = {-3.0, 4.0, -2.0, -1.0};
  cgae::MappingCodes m(4, 100);
  for (std::size_t t = 0; t < 100; ++t) {
    const auto& v = t < 70 ? a : b;
    for (std::size_t q = 0; q < 4; ++q) {
      m.at(q, t) = v[q] + 0.05 * rng.normal();
    }
  }
  Rng krng(16);
  const auto out = dominant_code(m, krng);
  for (std::size_t q = 0; q < 4; ++q) {
    CHECK(std::abs(out[q] - a[q]) < 0.1);
  }

  Rng k2(16);
  const auto out2 = dominant_code(m, k2);
  CHECK(out == out2);  // deterministic under a fixed seed
}

TEST_CASE("transfer depends on the source only through its dominant code") {
  Rng init = Rng::substream(3, Stream::kInit);
  const auto model = cgae::make_model<float>(cgae::ModelSpec::make(0.125), init);

  signal::CorpusConfig ccfg;
  ccfg.n_songs = 2;
  ccfg.bars = 4;
  const auto songs = signal::generate_corpus(ccfg, 21);

  Rng r1(17);
  const auto out = transfer(model, songs[0], songs[1].context, r1);
  CHECK(out.values.size() == songs[1].length());

  // replaying the pipeline by hand reproduces the output bitwise
  const auto m_src =
      cgae::infer_mappings(model, songs[0].context, songs[0].target);
  Rng r2(17);
  const auto code = dominant_code(m_src, r2);
  const auto codes = cgae::MappingCodes::broadcast(code, songs[1].length());
  const auto direct = cgae::reconstruct(model, songs[1].context, codes);
  CHECK(out.values == direct.values);
}
