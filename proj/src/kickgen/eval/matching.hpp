#pragma once

#include <vector>

namespace kickgen::eval {

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct Matching {
  std::vector<int> ref_to_est;  // per reference onset, matched est index or -1
  int tp = 0;
};

/// Maximum-cardinality one-to-one matching between sorted onset lists where
/// a pair is admissible iff |t_ref - t_est| <= tol. Augmenting-path
/// matching, not greedy: clustered onsets within one window still match
/// optimally. Throws on unsorted input.
Matching match_onsets(const std::vector<double>& ref,
                      const std::vector<double>& est, double tol = 0.05);

/// P = tp/n_est, R = tp/n_ref, F = 2PR/(P+R); zero denominators give 0.
PrfResult prf(const Matching& matching, int n_ref, int n_est);

}  // namespace kickgen::eval
