#include "kickgen/diffnum/adam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kickgen::diffnum {

Adam::Adam(AdamConfig cfg, ParamStore& store, std::string group)
    : cfg_(cfg), store_(&store), indices_(store.group_indices(group)) {
  m_.reserve(indices_.size());
  v_.reserve(indices_.size());
  for (int i : indices_) {
    m_.push_back(TensorF::zeros_like(store.entry(i).value));
    v_.push_back(TensorF::zeros_like(store.entry(i).value));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t j = 0; j < indices_.size(); ++j) {
    auto& e = store_->entry(indices_[j]);
    auto& m = m_[j].data;
    auto& v = v_[j].data;
    for (std::size_t i = 0; i < e.value.data.size(); ++i) {
      const double g = static_cast<double>(e.grad.data[i]);
      if (!std::isfinite(g)) {
        throw std::runtime_error("non-finite gradient in parameter " + e.name);
      }
      const double mi = cfg_.beta1 * static_cast<double>(m[i]) + (1.0 - cfg_.beta1) * g;
      const double vi = cfg_.beta2 * static_cast<double>(v[i]) + (1.0 - cfg_.beta2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      e.value.data[i] = static_cast<float>(
          static_cast<double>(e.value.data[i]) -
          cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

void Adam::restore(std::vector<TensorF> m, std::vector<TensorF> v,
                   std::int64_t t) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw std::invalid_argument("adam restore: state count mismatch");
  }
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (!m[j].same_shape(m_[j]) || !v[j].same_shape(v_[j])) {
      throw std::invalid_argument("adam restore: state shape mismatch");
    }
  }
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

void clip_group(ParamStore& store, const std::string& group, float c) {
  for (int i : store.group_indices(group)) {
    for (auto& w : store.entry(i).value.data) {
      w = std::clamp(w, -c, c);
    }
  }
}

}  // namespace kickgen::diffnum
