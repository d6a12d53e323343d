#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kickgen/cgae/model.hpp"
#include "kickgen/eval/matching.hpp"
#include "kickgen/signal/corpus.hpp"
#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::eval {

struct ScoreConfig {
  double threshold_ratio = 0.25;
  double tolerance_s = 0.05;
};

/// Onsets of a curve for scoring: standardize (a flat curve that cannot be
/// standardized yields no onsets), smooth, pick peaks.
std::vector<double> scoring_onsets(const signal::OnsetCurve& curve,
                                   const ScoreConfig& cfg);

/// PRF between the picked onsets of a reference and an estimate curve.
PrfResult score_curves(const signal::OnsetCurve& ref,
                       const signal::OnsetCurve& est, const ScoreConfig& cfg);

struct SongScore {
  std::string id;
  PrfResult prf;
  int selected_k = 0;  // style-transfer runs record the chosen cluster count
};

struct SplitReport {
  std::vector<SongScore> songs;
  PrfResult average;  // per-song averaged precision/recall/F, summed counts
};

/// Reconstruction from ground-truth mappings, scored per song.
SplitReport exp_ground_truth_recon(const cgae::CgaeModel& model,
                                   const std::vector<signal::SongRecord>& songs,
                                   const ScoreConfig& cfg);

/// Reconstruction from each song's dominant code broadcast over time.
SplitReport exp_self_transfer(const cgae::CgaeModel& model,
                              const std::vector<signal::SongRecord>& songs,
                              const ScoreConfig& cfg, std::uint64_t seed);

struct TransformScore {
  std::string kind;     // "shift" or "tempo"
  double amount = 0.0;  // frames or factor
  double mean_cosine = 0.0;
  double mean_f = 0.0;
};

struct InvarianceReport {
  std::vector<TransformScore> transforms;
  double mean_cosine_shift = 0.0;
  double mean_cosine_tempo = 0.0;
};

/// Tempo/shift invariance on re-rendered synthetic songs: (a) cosine
/// similarity of time-averaged codes against the original, (b) F-score of
/// reconstructing the transformed target with the original dominant code.
InvarianceReport exp_invariance(const cgae::CgaeModel& model,
                                const signal::CorpusConfig& corpus_cfg,
                                std::uint64_t corpus_seed,
                                const std::vector<int>& song_indices,
                                const std::vector<double>& tempo_factors,
                                const std::vector<int>& shifts,
                                const ScoreConfig& cfg, std::uint64_t seed);

struct SamplingReport {
  std::vector<int> onset_counts;  // per sampled code
  double in_range_fraction = 0.0;  // counts within [1, T/4]
  double mean_pairwise_f = 0.0;    // over distinct sample pairs
};

/// Draws n codes, reconstructs against one song's context, and reports the
/// onset-count distribution plus pairwise F as a diversity measure.
SamplingReport exp_conditional_sampling(const cgae::CgaeModel& model,
                                        const signal::SongRecord& song, int n,
                                        const ScoreConfig& cfg,
                                        std::uint64_t seed);

nlohmann::json split_report_json(const SplitReport& report);
nlohmann::json invariance_report_json(const InvarianceReport& report);
nlohmann::json sampling_report_json(const SamplingReport& report);
void write_split_csv(const std::string& path, const SplitReport& report);

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

}  // namespace kickgen::eval
