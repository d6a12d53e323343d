#pragma once

#include <stdexcept>

namespace kickgen {

/// Input file or directory is absent or unreadable.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A file exists but its contents violate the expected format.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A configuration document is invalid (unknown keys, bad ranges).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kickgen
