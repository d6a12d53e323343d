#pragma once

#include <vector>

#include "kickgen/cgae/model.hpp"
#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::train {

/// Mean over frames of the squared difference.
double loss_mse(const signal::OnsetCurve& y, const signal::OnsetCurve& y_hat);

/// Critic objective (1/T) sum_t [ D(m, ux)_t - D(eta, ux)_t ].
double loss_advers(const cgae::CgaeModel& model, const cgae::MappingCodes& m,
                   const cgae::MappingCodes& eta, const diffnum::TensorF& ux);

/// Temporal smoothness: (1/T) sum_{t=1}^{T-1} mean_q (m_{q,t} - m_{q,t+1})^2.
double loss_const(const cgae::MappingCodes& m);

/// Batch-statistics penalty: per map q over all observations (time x batch
/// instances), mean_q [ (var_q - 1)^2 + mu_q^2 ].
double loss_std(const std::vector<const cgae::MappingCodes*>& batch);

}  // namespace kickgen::train
