#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace kickgen {

/// FNV-1a 64-bit over a byte range; used for determinism checks.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xCBF29CE484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// FNV-1a 64-bit over the contents of a file. Throws IoError if unreadable.
std::uint64_t hash_file(const std::string& path);

/// Hash of a trivially-copyable value sequence.
template <typename T>
std::uint64_t fnv1a64_span(const T* data, std::size_t count,
                           std::uint64_t h = 0xCBF29CE484222325ULL) {
  return fnv1a64(data, count * sizeof(T), h);
}

}  // namespace kickgen
