#include "rtfs/norms.h"

#include <cmath>
#include <string>

namespace rtfs {

namespace {
void require_per_channel(const char* op, const Tensor& x, const Tensor& t, const char* name) {
  if (x.rank() < 1) throw shape_error(std::string(op) + ": rank-0 input");
  if (t.numel() != x.dim(0)) {
    throw shape_error(std::string(op) + ": " + name + " length " + std::to_string(t.numel()) +
                      " != channel count " + std::to_string(x.dim(0)));
  }
}
}  // namespace

Tensor gln(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  require_per_channel("gln", x, gamma, "gamma");
  require_per_channel("gln", x, beta, "beta");
  const std::int64_t n = x.numel();
  if (n == 0) return zeros_like(x);
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) sum += x.data[i];
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = x.data[i] - mean;
    sq += d * d;
  }
  const double var = sq / static_cast<double>(n);
  const float inv = static_cast<float>(1.0 / std::sqrt(var + eps));
  const float mu = static_cast<float>(mean);

  Tensor out = zeros_like(x);
  const std::int64_t c = x.dim(0);
  const std::int64_t plane = n / c;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float g = gamma.data[static_cast<std::size_t>(ci)];
    const float b = beta.data[static_cast<std::size_t>(ci)];
    const float* xr = x.ptr() + ci * plane;
    float* orow = out.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) orow[i] = g * (xr[i] - mu) * inv + b;
  }
  check_finite("gln", out);
  return out;
}

Tensor channel_ln(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  require_per_channel("channel_ln", x, gamma, "gamma");
  require_per_channel("channel_ln", x, beta, "beta");
  const std::int64_t c = x.dim(0);
  const std::int64_t plane = x.numel() / c;
  Tensor out = zeros_like(x);

  // Two streaming passes over channel-major storage instead of a strided
  // per-position gather.
  std::vector<double> sum(static_cast<std::size_t>(plane), 0.0);
  std::vector<double> sq(static_cast<std::size_t>(plane), 0.0);
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float* xr = x.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      sum[static_cast<std::size_t>(i)] += xr[i];
      sq[static_cast<std::size_t>(i)] += static_cast<double>(xr[i]) * xr[i];
    }
  }
  std::vector<float> mu(static_cast<std::size_t>(plane));
  std::vector<float> inv(static_cast<std::size_t>(plane));
  for (std::int64_t i = 0; i < plane; ++i) {
    const double m = sum[static_cast<std::size_t>(i)] / static_cast<double>(c);
    double v = sq[static_cast<std::size_t>(i)] / static_cast<double>(c) - m * m;
    if (v < 0.0) v = 0.0;
    mu[static_cast<std::size_t>(i)] = static_cast<float>(m);
    inv[static_cast<std::size_t>(i)] = static_cast<float>(1.0 / std::sqrt(v + eps));
  }
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float g = gamma.data[static_cast<std::size_t>(ci)];
    const float b = beta.data[static_cast<std::size_t>(ci)];
    const float* xr = x.ptr() + ci * plane;
    float* orow = out.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      orow[i] = g * (xr[i] - mu[static_cast<std::size_t>(i)]) * inv[static_cast<std::size_t>(i)] + b;
    }
  }
  check_finite("channel_ln", out);
  return out;
}

Tensor bn_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                 const Tensor& var, float eps) {
  require_per_channel("bn_affine", x, gamma, "gamma");
  require_per_channel("bn_affine", x, beta, "beta");
  require_per_channel("bn_affine", x, mean, "mean");
  require_per_channel("bn_affine", x, var, "var");
  const std::int64_t c = x.dim(0);
  const std::int64_t plane = x.numel() / c;
  Tensor out = zeros_like(x);
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const std::size_t cz = static_cast<std::size_t>(ci);
    const float inv = 1.0f / std::sqrt(var.data[cz] + eps);
    const float g = gamma.data[cz] * inv;
    const float b = beta.data[cz] - gamma.data[cz] * mean.data[cz] * inv;
    const float* xr = x.ptr() + ci * plane;
    float* orow = out.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) orow[i] = g * xr[i] + b;
  }
  check_finite("bn_affine", out);
  return out;
}

}  // namespace rtfs
