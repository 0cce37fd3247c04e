#pragma once

// Separation-quality metrics. SI-SNR follows the scale-invariant definition
// (projection weight w = <est, ref> / <ref, ref>); SDR is the plain
// signal-to-error ratio. Vanishing error energy is capped at +120 dB so
// results stay serializable.

#include <string>
#include <vector>

#include "rtfs/stft.h"

namespace rtfs {

inline constexpr double kMetricCapDb = 120.0;

struct MetricResult {
  double si_snr = 0.0;
  double si_snri = 0.0;
  double sdr = 0.0;
  double sdri = 0.0;
  bool capped = false;
};

double si_snr(const std::vector<float>& ref, const std::vector<float>& est,
              bool* capped = nullptr);
double sdr(const std::vector<float>& ref, const std::vector<float>& est, bool* capped = nullptr);

MetricResult improvements(const std::vector<float>& mix, const std::vector<float>& ref,
                          const std::vector<float>& est);

// Fixed field order: si_snr, si_snri, sdr, sdri, capped.
std::string metrics_to_json(const MetricResult& m);

}  // namespace rtfs
