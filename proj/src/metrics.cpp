#include "rtfs/metrics.h"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rtfs/errors.h"

namespace rtfs {

namespace {

void check_pair(const char* op, const std::vector<float>& ref, const std::vector<float>& est) {
  if (ref.size() != est.size()) {
    throw shape_error(std::string(op) + ": length mismatch " + std::to_string(ref.size()) +
                      " vs " + std::to_string(est.size()));
  }
  if (ref.empty()) throw shape_error(std::string(op) + ": empty signals");
  for (float v : ref) {
    if (!std::isfinite(v)) throw numeric_error(std::string(op) + ": non-finite reference");
  }
  for (float v : est) {
    if (!std::isfinite(v)) throw numeric_error(std::string(op) + ": non-finite estimate");
  }
}

double dot_d(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

double ratio_db(double signal, double error, bool* capped) {
  if (capped != nullptr) *capped = false;
  if (error < 1e-12 * signal) {
    if (capped != nullptr) *capped = true;
    return kMetricCapDb;
  }
  return std::min(kMetricCapDb, 10.0 * std::log10(signal / error));
}

}  // namespace

double si_snr(const std::vector<float>& ref, const std::vector<float>& est, bool* capped) {
  check_pair("si_snr", ref, est);
  const double ref_energy = dot_d(ref, ref);
  if (ref_energy <= 0.0) throw shape_error("si_snr: reference is all zero");
  const double w = dot_d(est, ref) / ref_energy;
  double target = 0.0, error = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double t = w * ref[i];
    const double e = est[i] - t;
    target += t * t;
    error += e * e;
  }
  return ratio_db(target, error, capped);
}

double sdr(const std::vector<float>& ref, const std::vector<float>& est, bool* capped) {
  check_pair("sdr", ref, est);
  const double ref_energy = dot_d(ref, ref);
  if (ref_energy <= 0.0) throw shape_error("sdr: reference is all zero");
  double error = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double e = static_cast<double>(ref[i]) - est[i];
    error += e * e;
  }
  return ratio_db(ref_energy, error, capped);
}

MetricResult improvements(const std::vector<float>& mix, const std::vector<float>& ref,
                          const std::vector<float>& est) {
  MetricResult r;
  bool c1 = false, c2 = false;
  r.si_snr = si_snr(ref, est, &c1);
  r.sdr = sdr(ref, est, &c2);
  r.si_snri = r.si_snr - si_snr(ref, mix);
  r.sdri = r.sdr - sdr(ref, mix);
  r.capped = c1 || c2;
  return r;
}

std::string metrics_to_json(const MetricResult& m) {
  nlohmann::ordered_json j;
  j["si_snr"] = m.si_snr;
  j["si_snri"] = m.si_snri;
  j["sdr"] = m.sdr;
  j["sdri"] = m.sdri;
  j["capped"] = m.capped;
  return j.dump(2);
}

}  // namespace rtfs
