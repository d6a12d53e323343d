#pragma once

#include <vector>

#include "kickgen/analysis/kmeans.hpp"
#include "kickgen/cgae/model.hpp"
#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::analysis {

/// Per-step codes as a point set (T points of dimension Q).
PointSet codes_to_points(const cgae::MappingCodes& m);

struct DominantCodeResult {
  std::vector<double> code;
  int k = 0;  // selected cluster count; 0 when the series was near-constant
};

/// Centroid of the largest cluster after Davies-Bouldin model selection
/// over k = 2..10 (capped by T); size ties keep the first-listed cluster.
/// Near-constant code series short-circuit to their mean column.
DominantCodeResult dominant_code_with_k(const cgae::MappingCodes& m, Rng& rng);
std::vector<double> dominant_code(const cgae::MappingCodes& m, Rng& rng);

/// Style transfer: the source song's dominant code, broadcast over the
/// target's length and decoded against the target context.
signal::OnsetCurve transfer(const cgae::CgaeModel& model,
                            const signal::SongRecord& source,
                            const signal::ContextBundle& target_x, Rng& rng);

}  // namespace kickgen::analysis
