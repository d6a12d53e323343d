#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kickgen::cgae {

/// Q x T mapping signal: per time step a Q-dimensional code describing how
/// the target relates to the context around that frame.
struct MappingCodes {
  std::size_t q = 0;
  std::size_t t = 0;
  std::vector<double> values;  // row-major (q, t)

  MappingCodes() = default;
  MappingCodes(std::size_t q_, std::size_t t_)
      : q(q_), t(t_), values(q_ * t_, 0.0) {}

  double& at(std::size_t qi, std::size_t ti) { return values[qi * t + ti]; }
  double at(std::size_t qi, std::size_t ti) const { return values[qi * t + ti]; }

  /// Code vector at one time step.
  std::vector<double> column(std::size_t ti) const {
    std::vector<double> out(q);
    for (std::size_t qi = 0; qi < q; ++qi) out[qi] = at(qi, ti);
    return out;
  }

  /// Mean over time of the per-step codes.
  std::vector<double> time_average() const {
    std::vector<double> out(q, 0.0);
    for (std::size_t qi = 0; qi < q; ++qi) {
      double acc = 0.0;
      for (std::size_t ti = 0; ti < t; ++ti) acc += at(qi, ti);
      out[qi] = acc / static_cast<double>(t);
    }
    return out;
  }

  /// One code vector repeated across all T columns.
  static MappingCodes broadcast(const std::vector<double>& code,
                                std::size_t t_len) {
    if (code.empty() || t_len == 0) {
      throw std::invalid_argument("broadcast: empty code or zero length");
    }
    MappingCodes m(code.size(), t_len);
    for (std::size_t qi = 0; qi < code.size(); ++qi) {
      for (std::size_t ti = 0; ti < t_len; ++ti) m.at(qi, ti) = code[qi];
    }
    return m;
  }
};

}  // namespace kickgen::cgae
