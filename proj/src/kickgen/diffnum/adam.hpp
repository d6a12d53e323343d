#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kickgen/diffnum/param_store.hpp"

namespace kickgen::diffnum {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// Adam over one parameter group of a store. State tensors are index-aligned
/// with the group's entries in insertion order.
class Adam {
 public:
  Adam(AdamConfig cfg, ParamStore& store, std::string group);

  /// One update from the entries' grad tensors. Throws on non-finite
  /// gradients, naming the offending tensor.
  void step();

  std::int64_t step_count() const { return t_; }

  // checkpoint plumbing
  const std::vector<TensorF>& moment1() const { return m_; }
  const std::vector<TensorF>& moment2() const { return v_; }
  void restore(std::vector<TensorF> m, std::vector<TensorF> v, std::int64_t t);
  const std::vector<int>& indices() const { return indices_; }

 private:
  AdamConfig cfg_;
  ParamStore* store_;
  std::vector<int> indices_;
  std::vector<TensorF> m_, v_;
  std::int64_t t_ = 0;
};

/// Clamps every tensor of a group to [-c, c] (critic weight clipping).
void clip_group(ParamStore& store, const std::string& group, float c);

}  // namespace kickgen::diffnum
