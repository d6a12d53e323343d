#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kickgen/cgae/model.hpp"
#include "kickgen/diffnum/adam.hpp"
#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::train {

using cgae::CgaeModel;
using cgae::CgaeModelT;
using cgae::GraphContext;
using diffnum::TensorT;

struct TrainConfig {
  int epochs = 2500;
  int batch_size = 100;
  int steps_per_epoch = 0;  // 0: ceil(n_songs / batch_size)
  int excerpt_len = 1024;   // scored frames per excerpt
  int margin = 150;         // extra frames on each side of the scored window
  double dropout_p = 0.5;
  diffnum::AdamConfig cgae_opt;
  diffnum::AdamConfig disc_opt;
  double clip_c = 0.05;  // critic weight clip; <= 0 disables
  double w_mse = 1.0, w_const = 1.0, w_std = 1.0, w_adv = 1.0;
  bool augment = true;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;  // epochs; 0 = only on demand
  std::string checkpoint_dir;

  void validate() const;
};

struct LossReport {
  int epoch = 0;
  int step = 0;
  double l_mse = 0.0;
  double l_advers = 0.0;
  double l_const = 0.0;
  double l_std = 0.0;
};

/// Uniform draw of one time-warp: integer shift in [-150, 150], scale in
/// [0.8, 1.2], independent.
signal::AugmentationParams sample_augmentation(Rng& rng);

/// One excerpt = a window of excerpt_len + 2*margin frames; losses are
/// evaluated on the central excerpt_len frames only, so warps up to +-margin
/// shift real data (not padding) through the scored region.
struct ExcerptRef {
  int song = 0;
  std::size_t pos = 0;
};

template <typename S>
struct BatchT {
  TensorT<S> x;  // (B, M, window)
  TensorT<S> y;  // (B, 1, window)
};

template <typename S>
struct StepDrawsT {
  std::vector<signal::AugmentationParams> thetas;  // per item; empty = identity
  TensorT<S> mask_enc;  // inverted-dropout mask for the mapping-inference pass
  TensorT<S> mask_dec;  // fresh mask for the reconstruction pass
  TensorT<S> eta;       // (B, Q, window) critic reference noise
};

struct StepNodes {
  int m = -1;
  int ladv = -1;
  int recon = -1;
  int lmse = -1;
  int lconst = -1;
  int lstd = -1;
  int total = -1;
};

std::vector<ExcerptRef> draw_excerpts(const std::vector<signal::SongRecord>& corpus,
                                      int batch_size, std::size_t window,
                                      Rng& rng);

template <typename S>
BatchT<S> assemble_batch(const std::vector<signal::SongRecord>& corpus,
                         const std::vector<ExcerptRef>& refs,
                         std::size_t window);

template <typename S>
StepDrawsT<S> draw_step(const cgae::ModelSpec& spec, std::size_t batch,
                        std::size_t window, const TrainConfig& cfg,
                        bool with_reconstruction, Rng& drop_rng, Rng& eta_rng,
                        Rng* aug_rng);

/// Applies the per-item warp to every channel row; identity draws pass
/// through untouched.
template <typename S>
TensorT<S> warp_tensor(const TensorT<S>& x,
                       const std::vector<signal::AugmentationParams>& thetas);

/// Critic update graph: m inferred from (dropout(x), y), fresh noise, and
/// the advantage mean over the scored window.
template <typename S>
StepNodes build_step1(GraphContext<S>& ctx, const BatchT<S>& batch,
                      const StepDrawsT<S>& draws, const TrainConfig& cfg);

/// Full generator objective: m from the untransformed pair, reconstruction
/// from the warped context with fresh dropout, and
/// total = w_mse*Lmse + w_const*Lconst + w_std*Lstd - w_adv*Ladvers.
template <typename S>
StepNodes build_step2(GraphContext<S>& ctx, const BatchT<S>& batch,
                      const StepDrawsT<S>& draws, const TrainConfig& cfg);

/// Owns the model and optimizer state; per-step randomness is derived from
/// (seed, epoch, step) counters so runs and checkpoint resumes replay
/// identically.
class Trainer {
 public:
  Trainer(CgaeModel model, std::vector<signal::SongRecord> corpus,
          TrainConfig cfg);

  static Trainer resume(const std::string& checkpoint_path,
                        std::vector<signal::SongRecord> corpus,
                        TrainConfig cfg);

  /// Two-step update on one sampled batch (epochs and steps are 1- and
  /// 0-based respectively).
  LossReport train_step(int epoch, int step);

  /// Runs all remaining epochs; returns the per-step loss history.
  std::vector<LossReport> run();

  CgaeModel& model() { return model_; }
  const CgaeModel& model() const { return model_; }
  int steps_per_epoch() const { return steps_per_epoch_; }
  int completed_epochs() const { return completed_epochs_; }

  /// Model + optimizer state + epoch counter.
  void save_checkpoint(const std::string& path) const;

 private:
  CgaeModel model_;
  std::vector<signal::SongRecord> corpus_;
  TrainConfig cfg_;
  diffnum::Adam adam_cgae_;
  diffnum::Adam adam_disc_;
  int steps_per_epoch_ = 0;
  int completed_epochs_ = 0;

  void check_corpus() const;
};

void write_history_csv(const std::string& path,
                       const std::vector<LossReport>& history);

}  // namespace kickgen::train
