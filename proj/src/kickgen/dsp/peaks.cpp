#include "kickgen/dsp/peaks.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kickgen/common/errors.hpp"
#include "kickgen/dsp/butterworth.hpp"

namespace kickgen::dsp {

void PeakPickConfig::validate() const {
  if (!(threshold_ratio > 0.0) || !(threshold_ratio < 1.0)) {
    throw std::invalid_argument("peak picking: threshold_ratio must be in (0, 1)");
  }
}

OnsetList select_peaks(const signal::OnsetCurve& smoothed,
                       const PeakPickConfig& config) {
  config.validate();
  OnsetList out;
  if (smoothed.length() < 3) return out;
  const double vmax =
      *std::max_element(smoothed.values.begin(), smoothed.values.end());
  if (!(vmax > 0.0)) return out;  // flat or all-negative curve
  const double threshold = config.threshold_ratio * vmax;

  for (std::size_t i = 1; i + 1 < smoothed.length(); ++i) {
    const double v = smoothed.values[i];
    if (v > smoothed.values[i - 1] && v > smoothed.values[i + 1] &&
        v >= threshold) {
      Onset o;
      o.time_s = static_cast<double>(i) / smoothed.frame_rate;
      o.gain = vmax > threshold
                   ? 0.7 + 0.3 * (v - threshold) / (vmax - threshold)
                   : 0.7;
      o.gain = std::clamp(o.gain, 0.7, 1.0);
      out.onsets.push_back(o);
    }
  }
  return out;
}

OnsetList pick_peaks(const signal::OnsetCurve& standardized,
                     const PeakPickConfig& config) {
  return select_peaks(smooth_zero_phase(standardized), config);
}

void write_onsets_csv(const std::string& path, const OnsetList& onsets) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write onsets: " + path);
  out << "time_s,gain\n";
  out.precision(17);
  for (const auto& o : onsets.onsets) {
    out << o.time_s << ',' << o.gain << '\n';
  }
}

OnsetList read_onsets_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open onsets: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("time_s,gain", 0) != 0) {
    throw FormatError("onsets CSV missing header: " + path);
  }
  OnsetList out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Onset o;
    char comma = 0;
    if (!(ss >> o.time_s >> comma >> o.gain) || comma != ',') {
      throw FormatError("bad onsets CSV row: " + line);
    }
    out.onsets.push_back(o);
  }
  return out;
}

}  // namespace kickgen::dsp
