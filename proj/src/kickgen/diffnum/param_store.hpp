#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kickgen/diffnum/tensor.hpp"

namespace kickgen::diffnum {

inline constexpr const char* kGroupCgae = "cgae";
inline constexpr const char* kGroupDisc = "discriminator";

template <typename S>
struct ParamEntry {
  std::string name;
  std::string group;
  TensorT<S> value;
  TensorT<S> grad;  // same shape as value, zeroed between steps
};

/// Named, ordered collection of trainable tensors partitioned into the
/// {cgae, discriminator} groups. Insertion order is the canonical order for
/// optimizer updates and checkpoint layout.
template <typename S>
class ParamStoreT {
 public:
  int add(std::string name, std::string group, TensorT<S> value) {
    if (index_.count(name)) {
      throw std::invalid_argument("duplicate parameter name: " + name);
    }
    const int id = static_cast<int>(entries_.size());
    ParamEntry<S> e;
    e.name = std::move(name);
    e.group = std::move(group);
    e.grad = TensorT<S>::zeros_like(value);
    e.value = std::move(value);
    index_.emplace(e.name, id);
    entries_.push_back(std::move(e));
    return id;
  }

  int index_of(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }

  ParamEntry<S>& entry(int i) { return entries_.at(static_cast<std::size_t>(i)); }
  const ParamEntry<S>& entry(int i) const {
    return entries_.at(static_cast<std::size_t>(i));
  }
  ParamEntry<S>& entry(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) throw std::invalid_argument("unknown parameter: " + name);
    return entries_[static_cast<std::size_t>(i)];
  }

  std::size_t count() const { return entries_.size(); }

  void zero_grads() {
    for (auto& e : entries_) {
      std::fill(e.grad.data.begin(), e.grad.data.end(), S(0));
    }
  }

  std::vector<int> group_indices(const std::string& group) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].group == group) out.push_back(static_cast<int>(i));
    }
    return out;
  }

 private:
  std::vector<ParamEntry<S>> entries_;
  std::unordered_map<std::string, int> index_;
};

using ParamStore = ParamStoreT<float>;

}  // namespace kickgen::diffnum
