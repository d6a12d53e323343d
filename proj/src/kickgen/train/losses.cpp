#include "kickgen/train/losses.hpp"

#include <stdexcept>

namespace kickgen::train {

double loss_mse(const signal::OnsetCurve& y, const signal::OnsetCurve& y_hat) {
  if (y.length() != y_hat.length()) {
    throw std::invalid_argument("loss_mse: length mismatch");
  }
  if (y.length() == 0) throw std::invalid_argument("loss_mse: empty curves");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.length(); ++i) {
    const double d = y.values[i] - y_hat.values[i];
    acc += d * d;
  }
  return acc / static_cast<double>(y.length());
}

double loss_advers(const cgae::CgaeModel& model, const cgae::MappingCodes& m,
                   const cgae::MappingCodes& eta, const diffnum::TensorF& ux) {
  if (m.t != eta.t || m.t != ux.time()) {
    throw std::invalid_argument("loss_advers: length mismatch");
  }
  const auto s_m = cgae::discriminate(model, m, ux);
  const auto s_eta = cgae::discriminate(model, eta, ux);
  double acc = 0.0;
  for (std::size_t t = 0; t < s_m.size(); ++t) acc += s_m[t] - s_eta[t];
  return acc / static_cast<double>(s_m.size());
}

double loss_const(const cgae::MappingCodes& m) {
  if (m.t < 2) throw std::invalid_argument("loss_const: needs T >= 2");
  double acc = 0.0;
  for (std::size_t t = 0; t + 1 < m.t; ++t) {
    double step = 0.0;
    for (std::size_t q = 0; q < m.q; ++q) {
      const double d = m.at(q, t) - m.at(q, t + 1);
      step += d * d;
    }
    acc += step / static_cast<double>(m.q);
  }
  return acc / static_cast<double>(m.t);
}

double loss_std(const std::vector<const cgae::MappingCodes*>& batch) {
  if (batch.empty()) throw std::invalid_argument("loss_std: empty batch");
  const std::size_t q_dims = batch.front()->q;
  std::size_t n = 0;
  for (const auto* m : batch) {
    if (m->q != q_dims) throw std::invalid_argument("loss_std: Q mismatch");
    n += m->t;
  }
  if (n < 2) throw std::invalid_argument("loss_std: needs N >= 2");

  double total = 0.0;
  for (std::size_t q = 0; q < q_dims; ++q) {
    double mu = 0.0;
    for (const auto* m : batch) {
      for (std::size_t t = 0; t < m->t; ++t) mu += m->at(q, t);
    }
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (const auto* m : batch) {
      for (std::size_t t = 0; t < m->t; ++t) {
        const double d = m->at(q, t) - mu;
        var += d * d;
      }
    }
    var /= static_cast<double>(n);
    total += (var - 1.0) * (var - 1.0) + mu * mu;
  }
  return total / static_cast<double>(q_dims);
}

}  // namespace kickgen::train
