#include "kickgen/eval/matching.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kickgen::eval {

namespace {

bool is_sorted_list(const std::vector<double>& v) {
  return std::is_sorted(v.begin(), v.end());
}

struct Kuhn {
  const std::vector<std::vector<int>>& adj;
  std::vector<int> est_to_ref;
  std::vector<char> visited;

  explicit Kuhn(const std::vector<std::vector<int>>& a, std::size_t n_est)
      : adj(a), est_to_ref(n_est, -1) {}

  bool try_augment(int i) {
    for (int j : adj[static_cast<std::size_t>(i)]) {
      if (visited[static_cast<std::size_t>(j)]) continue;
      visited[static_cast<std::size_t>(j)] = 1;
      if (est_to_ref[static_cast<std::size_t>(j)] < 0 ||
          try_augment(est_to_ref[static_cast<std::size_t>(j)])) {
        est_to_ref[static_cast<std::size_t>(j)] = i;
        return true;
      }
    }
    return false;
  }
};

}  // namespace

Matching match_onsets(const std::vector<double>& ref,
                      const std::vector<double>& est, double tol) {
  if (!is_sorted_list(ref) || !is_sorted_list(est)) {
    throw std::invalid_argument("match_onsets: inputs must be sorted");
  }
  if (tol < 0.0) throw std::invalid_argument("match_onsets: negative tolerance");

  // admissible est indices per ref via a sliding window
  std::vector<std::vector<int>> adj(ref.size());
  std::size_t lo = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    while (lo < est.size() && est[lo] < ref[i] - tol) ++lo;
    for (std::size_t j = lo; j < est.size() && est[j] <= ref[i] + tol; ++j) {
      adj[i].push_back(static_cast<int>(j));
    }
  }

  Kuhn kuhn(adj, est.size());
  int matched = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    kuhn.visited.assign(est.size(), 0);
    if (kuhn.try_augment(static_cast<int>(i))) ++matched;
  }

  Matching out;
  out.tp = matched;
  out.ref_to_est.assign(ref.size(), -1);
  for (std::size_t j = 0; j < kuhn.est_to_ref.size(); ++j) {
    if (kuhn.est_to_ref[j] >= 0) {
      out.ref_to_est[static_cast<std::size_t>(kuhn.est_to_ref[j])] =
          static_cast<int>(j);
    }
  }
  return out;
}

PrfResult prf(const Matching& matching, int n_ref, int n_est) {
  PrfResult r;
  r.tp = matching.tp;
  r.fp = n_est - matching.tp;
  r.fn = n_ref - matching.tp;
  r.precision = n_est > 0 ? static_cast<double>(r.tp) / n_est : 0.0;
  r.recall = n_ref > 0 ? static_cast<double>(r.tp) / n_ref : 0.0;
  r.f_score = (r.precision + r.recall) > 0.0
                  ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                  : 0.0;
  return r;
}

}  // namespace kickgen::eval
