#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "kickgen/diffnum/param_store.hpp"
#include "kickgen/diffnum/tensor.hpp"

namespace kickgen::diffnum {

struct NamedTensor {
  std::string name;
  std::string group;
  TensorF tensor;
};

/// Checkpoint file layout: a little-endian u32 header length, a JSON header
/// {"format_version", "meta", "tensors": [{name, group, shape, dtype,
/// offset, length}]}, then the raw f32 payloads back to back. Offsets are
/// relative to the end of the header.
void save_checkpoint(const std::string& path,
                     const std::vector<NamedTensor>& tensors,
                     const nlohmann::json& meta);

struct CheckpointData {
  std::vector<NamedTensor> tensors;
  nlohmann::json meta;

  const NamedTensor* find(const std::string& name) const;
};

/// Loads and validates a checkpoint (magic length, offsets, payload size).
CheckpointData load_checkpoint(const std::string& path);

/// Convenience: snapshot a parameter store (both groups, insertion order).
std::vector<NamedTensor> snapshot_store(const ParamStore& store);

}  // namespace kickgen::diffnum
