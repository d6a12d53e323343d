#include "kickgen/analysis/transfer.hpp"

#include <cmath>
#include <stdexcept>

namespace kickgen::analysis {

PointSet codes_to_points(const cgae::MappingCodes& m) {
  PointSet points(m.t, m.q);
  for (std::size_t t = 0; t < m.t; ++t) {
    double* p = points.point(t);
    for (std::size_t q = 0; q < m.q; ++q) p[q] = m.at(q, t);
  }
  return points;
}

DominantCodeResult dominant_code_with_k(const cgae::MappingCodes& m, Rng& rng) {
  if (m.t < 2) throw std::invalid_argument("dominant_code: needs T >= 2");
  const PointSet points = codes_to_points(m);

  // near-constant series: clustering is degenerate, the answer is the mean
  double spread = 0.0;
  for (std::size_t t = 0; t < m.t; ++t) {
    for (std::size_t q = 0; q < m.q; ++q) {
      spread = std::max(spread, std::abs(m.at(q, t) - m.at(q, 0)));
    }
  }
  if (spread < 1e-9) {
    std::vector<double> mean(m.q, 0.0);
    for (std::size_t t = 0; t < m.t; ++t) {
      for (std::size_t q = 0; q < m.q; ++q) mean[q] += m.at(q, t);
    }
    for (auto& v : mean) v /= static_cast<double>(m.t);
    return {std::move(mean), 0};
  }

  const int k_max = static_cast<int>(std::min<std::size_t>(10, m.t));
  const auto [k, clustering] = select_k(points, 2, k_max, rng);
  std::size_t largest = 0;
  for (std::size_t c = 1; c < static_cast<std::size_t>(k); ++c) {
    if (clustering.sizes[c] > clustering.sizes[largest]) largest = c;
  }
  const double* centroid = clustering.centroid(largest);
  return {std::vector<double>(centroid, centroid + m.q), k};
}

std::vector<double> dominant_code(const cgae::MappingCodes& m, Rng& rng) {
  return dominant_code_with_k(m, rng).code;
}

signal::OnsetCurve transfer(const cgae::CgaeModel& model,
                            const signal::SongRecord& source,
                            const signal::ContextBundle& target_x, Rng& rng) {
  const auto m_src = cgae::infer_mappings(model, source.context, source.target);
  const auto code = dominant_code(m_src, rng);
  const auto codes = cgae::MappingCodes::broadcast(code, target_x.length());
  return cgae::reconstruct(model, target_x, codes);
}

}  // namespace kickgen::analysis
