#include "kickgen/eval/experiments.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "kickgen/analysis/transfer.hpp"
#include "kickgen/common/errors.hpp"
#include "kickgen/dsp/peaks.hpp"

namespace kickgen::eval {

std::vector<double> scoring_onsets(const signal::OnsetCurve& curve,
                                   const ScoreConfig& cfg) {
  signal::OnsetCurve prepared;
  try {
    prepared = signal::standardize(curve);
  } catch (const std::invalid_argument&) {
    return {};  // flat output: nothing to pick
  }
  dsp::PeakPickConfig pick;
  pick.threshold_ratio = cfg.threshold_ratio;
  return dsp::pick_peaks(prepared, pick).times();
}

PrfResult score_curves(const signal::OnsetCurve& ref,
                       const signal::OnsetCurve& est, const ScoreConfig& cfg) {
  const auto ref_onsets = scoring_onsets(ref, cfg);
  const auto est_onsets = scoring_onsets(est, cfg);
  const auto matching = match_onsets(ref_onsets, est_onsets, cfg.tolerance_s);
  return prf(matching, static_cast<int>(ref_onsets.size()),
             static_cast<int>(est_onsets.size()));
}

namespace {

PrfResult per_song_average(std::vector<SongScore>& songs) {
  PrfResult avg;
  if (songs.empty()) return avg;
  for (const auto& s : songs) {
    avg.precision += s.prf.precision;
    avg.recall += s.prf.recall;
    avg.f_score += s.prf.f_score;
    avg.tp += s.prf.tp;
    avg.fp += s.prf.fp;
    avg.fn += s.prf.fn;
  }
  const auto n = static_cast<double>(songs.size());
  avg.precision /= n;
  avg.recall /= n;
  avg.f_score /= n;
  return avg;
}

}  // namespace

SplitReport exp_ground_truth_recon(const cgae::CgaeModel& model,
                                   const std::vector<signal::SongRecord>& songs,
                                   const ScoreConfig& cfg) {
  SplitReport report;
  for (const auto& song : songs) {
    const auto m = cgae::infer_mappings(model, song.context, song.target);
    const auto recon = cgae::reconstruct(model, song.context, m);
    SongScore score;
    score.id = song.id;
    score.prf = score_curves(song.target, recon, cfg);
    report.songs.push_back(std::move(score));
  }
  report.average = per_song_average(report.songs);
  return report;
}

SplitReport exp_self_transfer(const cgae::CgaeModel& model,
                              const std::vector<signal::SongRecord>& songs,
                              const ScoreConfig& cfg, std::uint64_t seed) {
  SplitReport report;
  for (std::size_t i = 0; i < songs.size(); ++i) {
    const auto& song = songs[i];
    const auto m = cgae::infer_mappings(model, song.context, song.target);
    Rng rng = Rng::substream(seed, Stream::kKmeans, {i});
    const auto dominant = analysis::dominant_code_with_k(m, rng);
    const auto codes =
        cgae::MappingCodes::broadcast(dominant.code, song.length());
    const auto recon = cgae::reconstruct(model, song.context, codes);
    SongScore score;
    score.id = song.id;
    score.prf = score_curves(song.target, recon, cfg);
    score.selected_k = dominant.k;
    report.songs.push_back(std::move(score));
  }
  report.average = per_song_average(report.songs);
  return report;
}

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine: dimension mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

InvarianceReport exp_invariance(const cgae::CgaeModel& model,
                                const signal::CorpusConfig& corpus_cfg,
                                std::uint64_t corpus_seed,
                                const std::vector<int>& song_indices,
                                const std::vector<double>& tempo_factors,
                                const std::vector<int>& shifts,
                                const ScoreConfig& cfg, std::uint64_t seed) {
  const auto specs = signal::corpus_specs(corpus_cfg, corpus_seed);

  struct Original {
    signal::SongRecord song;
    std::vector<double> code_avg;
    std::vector<double> dominant;
  };
  std::vector<Original> originals;
  for (int idx : song_indices) {
    const auto& spec = specs.at(static_cast<std::size_t>(idx));
    Original orig;
    orig.song = signal::render_song(corpus_cfg, spec, corpus_seed);
    const auto m =
        cgae::infer_mappings(model, orig.song.context, orig.song.target);
    orig.code_avg = m.time_average();
    Rng rng = Rng::substream(seed, Stream::kKmeans,
                             {static_cast<std::uint64_t>(idx)});
    orig.dominant = analysis::dominant_code(m, rng);
    originals.push_back(std::move(orig));
  }

  InvarianceReport report;
  const auto score_transform = [&](const std::string& kind, double amount,
                                   auto&& make_transformed) {
    TransformScore ts;
    ts.kind = kind;
    ts.amount = amount;
    for (std::size_t i = 0; i < originals.size(); ++i) {
      const signal::SongRecord transformed =
          make_transformed(originals[i], song_indices[i]);
      const auto m = cgae::infer_mappings(model, transformed.context,
                                          transformed.target);
      ts.mean_cosine +=
          cosine_similarity(originals[i].code_avg, m.time_average());
      const auto codes = cgae::MappingCodes::broadcast(originals[i].dominant,
                                                       transformed.length());
      const auto recon = cgae::reconstruct(model, transformed.context, codes);
      ts.mean_f += score_curves(transformed.target, recon, cfg).f_score;
    }
    ts.mean_cosine /= static_cast<double>(originals.size());
    ts.mean_f /= static_cast<double>(originals.size());
    report.transforms.push_back(ts);
    return ts.mean_cosine;
  };

  double shift_acc = 0.0;
  for (int s : shifts) {
    signal::AugmentationParams p;
    p.shift = s;
    p.scale = 1.0;
    shift_acc += score_transform(
        "shift", static_cast<double>(s), [&](const Original& orig, int) {
          signal::SongRecord warped = orig.song;
          for (auto& ch : warped.context.channels) {
            ch = signal::apply_time_warp(ch, p);
          }
          warped.target = signal::apply_time_warp(warped.target, p);
          warped.onset_times.clear();
          return warped;
        });
  }
  double tempo_acc = 0.0;
  for (double f : tempo_factors) {
    tempo_acc += score_transform(
        "tempo", f, [&](const Original&, int idx) {
          auto spec = specs.at(static_cast<std::size_t>(idx));
          spec.tempo_bpm *= f;
          return signal::render_song(corpus_cfg, spec, corpus_seed);
        });
  }
  report.mean_cosine_shift =
      shifts.empty() ? 1.0 : shift_acc / static_cast<double>(shifts.size());
  report.mean_cosine_tempo =
      tempo_factors.empty()
          ? 1.0
          : tempo_acc / static_cast<double>(tempo_factors.size());
  return report;
}

SamplingReport exp_conditional_sampling(const cgae::CgaeModel& model,
                                        const signal::SongRecord& song, int n,
                                        const ScoreConfig& cfg,
                                        std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sampling experiment: n must be >= 2");
  SamplingReport report;
  std::vector<std::vector<double>> onset_lists;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::substream(seed, Stream::kSampling,
                             {static_cast<std::uint64_t>(i)});
    const auto codes =
        cgae::sample_codes(model.spec.code_dims, song.length(), rng);
    const auto recon = cgae::reconstruct(model, song.context, codes);
    onset_lists.push_back(scoring_onsets(recon, cfg));
    report.onset_counts.push_back(static_cast<int>(onset_lists.back().size()));
  }

  const auto t_quarter = static_cast<int>(song.length() / 4);
  int in_range = 0;
  for (int c : report.onset_counts) {
    if (c >= 1 && c <= t_quarter) ++in_range;
  }
  report.in_range_fraction = static_cast<double>(in_range) / n;

  double f_acc = 0.0;
  std::size_t pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = onset_lists[static_cast<std::size_t>(i)];
      const auto& b = onset_lists[static_cast<std::size_t>(j)];
      const auto matching = match_onsets(a, b, cfg.tolerance_s);
      f_acc += prf(matching, static_cast<int>(a.size()),
                   static_cast<int>(b.size()))
                   .f_score;
      ++pairs;
    }
  }
  report.mean_pairwise_f = pairs > 0 ? f_acc / static_cast<double>(pairs) : 0.0;
  return report;
}

nlohmann::json split_report_json(const SplitReport& report) {
  nlohmann::json songs = nlohmann::json::array();
  for (const auto& s : report.songs) {
    nlohmann::json row{{"id", s.id},
                       {"precision", s.prf.precision},
                       {"recall", s.prf.recall},
                       {"f_score", s.prf.f_score},
                       {"tp", s.prf.tp},
                       {"fp", s.prf.fp},
                       {"fn", s.prf.fn}};
    if (s.selected_k > 0) row["selected_k"] = s.selected_k;
    songs.push_back(std::move(row));
  }
  return nlohmann::json{{"songs", std::move(songs)},
                        {"average",
                         {{"precision", report.average.precision},
                          {"recall", report.average.recall},
                          {"f_score", report.average.f_score}}}};
}

nlohmann::json invariance_report_json(const InvarianceReport& report) {
  nlohmann::json transforms = nlohmann::json::array();
  for (const auto& t : report.transforms) {
    transforms.push_back({{"kind", t.kind},
                          {"amount", t.amount},
                          {"mean_cosine", t.mean_cosine},
                          {"mean_f", t.mean_f}});
  }
  return nlohmann::json{{"transforms", std::move(transforms)},
                        {"mean_cosine_shift", report.mean_cosine_shift},
                        {"mean_cosine_tempo", report.mean_cosine_tempo}};
}

nlohmann::json sampling_report_json(const SamplingReport& report) {
  return nlohmann::json{{"onset_counts", report.onset_counts},
                        {"in_range_fraction", report.in_range_fraction},
                        {"mean_pairwise_f", report.mean_pairwise_f}};
}

void write_split_csv(const std::string& path, const SplitReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report CSV: " + path);
  out << "id,precision,recall,f_score,tp,fp,fn\n";
  out.precision(17);
  for (const auto& s : report.songs) {
    out << s.id << ',' << s.prf.precision << ',' << s.prf.recall << ','
        << s.prf.f_score << ',' << s.prf.tp << ',' << s.prf.fp << ','
        << s.prf.fn << '\n';
  }
}

}  // namespace kickgen::eval
