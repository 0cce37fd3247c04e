#include "rtfs/dual.h"

#include <cmath>
#include <vector>

namespace rtfs {

namespace {
thread_local KinkMonitor* g_kink_monitor = nullptr;

void report_kinks(const Tensor& pre) {
  if (g_kink_monitor == nullptr) return;
  float m = g_kink_monitor->min_abs;
  for (float v : pre.data) {
    const float a = std::fabs(v);
    if (a < m) m = a;
  }
  g_kink_monitor->min_abs = m;
}

void require_pair(const DualTensor& x) {
  if (!same_dims(x.v, x.t)) {
    throw shape_error("dual: tangent dims " + dims_to_string(x.t.dims) +
                      " != value dims " + dims_to_string(x.v.dims));
  }
}

ConvSpec no_bias(ConvSpec s) {
  s.has_bias = false;
  return s;
}
}  // namespace

KinkMonitor* set_kink_monitor(KinkMonitor* m) {
  KinkMonitor* prev = g_kink_monitor;
  g_kink_monitor = m;
  return prev;
}

DualTensor make_dual(Tensor value, Tensor tangent) {
  DualTensor d{std::move(value), std::move(tangent)};
  require_pair(d);
  return d;
}

DualTensor lift(const Tensor& value) { return DualTensor{value, zeros_like(value)}; }

DualTensor conv2d(const DualTensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b) {
  require_pair(x);
  return {conv2d(x.v, spec, w, b), conv2d(x.t, no_bias(spec), w, nullptr)};
}

DualTensor conv1d(const DualTensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b) {
  require_pair(x);
  return {conv1d(x.v, spec, w, b), conv1d(x.t, no_bias(spec), w, nullptr)};
}

DualTensor conv1d_sliced(const DualTensor& x, const ConvSpec& spec, const Tensor& w,
                         const Tensor* b) {
  require_pair(x);
  return {conv1d_sliced(x.v, spec, w, b), conv1d_sliced(x.t, no_bias(spec), w, nullptr)};
}

DualTensor gln(const DualTensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  require_pair(x);
  const std::int64_t n = x.v.numel();
  double sum = 0.0, tsum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    sum += x.v.data[i];
    tsum += x.t.data[i];
  }
  const double mu = sum / static_cast<double>(n);
  const double dmu = tsum / static_cast<double>(n);
  double sq = 0.0, cross = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = x.v.data[i] - mu;
    sq += d * d;
    cross += d * x.t.data[i];
  }
  const double var = sq / static_cast<double>(n);
  const double dvar = 2.0 * cross / static_cast<double>(n);
  const double s = std::sqrt(var + eps);
  const double inv = 1.0 / s;
  const double dinv_term = dvar / (2.0 * s * s * s);

  DualTensor out{zeros_like(x.v), zeros_like(x.v)};
  const std::int64_t c = x.v.dim(0);
  const std::int64_t plane = n / c;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float g = gamma.data[static_cast<std::size_t>(ci)];
    const float bb = beta.data[static_cast<std::size_t>(ci)];
    const float* xv = x.v.ptr() + ci * plane;
    const float* xt = x.t.ptr() + ci * plane;
    float* ov = out.v.ptr() + ci * plane;
    float* ot = out.t.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      const double d = xv[i] - mu;
      ov[i] = static_cast<float>(g * d * inv + bb);
      ot[i] = static_cast<float>(g * ((xt[i] - dmu) * inv - d * dinv_term));
    }
  }
  return out;
}

DualTensor channel_ln(const DualTensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  require_pair(x);
  const std::int64_t c = x.v.dim(0);
  const std::int64_t plane = x.v.numel() / c;
  std::vector<double> sum(static_cast<std::size_t>(plane), 0.0);
  std::vector<double> tsum(static_cast<std::size_t>(plane), 0.0);
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float* xv = x.v.ptr() + ci * plane;
    const float* xt = x.t.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      sum[static_cast<std::size_t>(i)] += xv[i];
      tsum[static_cast<std::size_t>(i)] += xt[i];
    }
  }
  std::vector<double> mu(static_cast<std::size_t>(plane)), dmu(static_cast<std::size_t>(plane));
  for (std::int64_t i = 0; i < plane; ++i) {
    mu[static_cast<std::size_t>(i)] = sum[static_cast<std::size_t>(i)] / static_cast<double>(c);
    dmu[static_cast<std::size_t>(i)] = tsum[static_cast<std::size_t>(i)] / static_cast<double>(c);
  }
  std::vector<double> sq(static_cast<std::size_t>(plane), 0.0);
  std::vector<double> cross(static_cast<std::size_t>(plane), 0.0);
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float* xv = x.v.ptr() + ci * plane;
    const float* xt = x.t.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      const double d = xv[i] - mu[static_cast<std::size_t>(i)];
      sq[static_cast<std::size_t>(i)] += d * d;
      cross[static_cast<std::size_t>(i)] += d * xt[i];
    }
  }
  std::vector<double> inv(static_cast<std::size_t>(plane)), dterm(static_cast<std::size_t>(plane));
  for (std::int64_t i = 0; i < plane; ++i) {
    const std::size_t iz = static_cast<std::size_t>(i);
    const double var = sq[iz] / static_cast<double>(c);
    const double dvar = 2.0 * cross[iz] / static_cast<double>(c);
    const double s = std::sqrt(var + eps);
    inv[iz] = 1.0 / s;
    dterm[iz] = dvar / (2.0 * s * s * s);
  }
  DualTensor out{zeros_like(x.v), zeros_like(x.v)};
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float g = gamma.data[static_cast<std::size_t>(ci)];
    const float bb = beta.data[static_cast<std::size_t>(ci)];
    const float* xv = x.v.ptr() + ci * plane;
    const float* xt = x.t.ptr() + ci * plane;
    float* ov = out.v.ptr() + ci * plane;
    float* ot = out.t.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      const std::size_t iz = static_cast<std::size_t>(i);
      const double d = xv[i] - mu[iz];
      ov[i] = static_cast<float>(g * d * inv[iz] + bb);
      ot[i] = static_cast<float>(g * ((xt[i] - dmu[iz]) * inv[iz] - d * dterm[iz]));
    }
  }
  return out;
}

DualTensor bn_affine(const DualTensor& x, const Tensor& gamma, const Tensor& beta,
                     const Tensor& mean, const Tensor& var, float eps) {
  require_pair(x);
  DualTensor out;
  out.v = bn_affine(x.v, gamma, beta, mean, var, eps);
  // tangent sees only the per-channel scale
  out.t = zeros_like(x.t);
  const std::int64_t c = x.v.dim(0);
  const std::int64_t plane = x.v.numel() / c;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const std::size_t cz = static_cast<std::size_t>(ci);
    const float g = gamma.data[cz] / std::sqrt(var.data[cz] + eps);
    const float* xt = x.t.ptr() + ci * plane;
    float* ot = out.t.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) ot[i] = g * xt[i];
  }
  return out;
}

DualTensor relu(const DualTensor& x) {
  require_pair(x);
  report_kinks(x.v);
  DualTensor out{zeros_like(x.v), zeros_like(x.v)};
  const std::int64_t n = x.v.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    // right-derivative at the kink: x == 0 passes the tangent through
    const bool on = x.v.data[i] >= 0.0f;
    out.v.data[i] = x.v.data[i] > 0.0f ? x.v.data[i] : 0.0f;
    out.t.data[i] = on ? x.t.data[i] : 0.0f;
  }
  return out;
}

DualTensor prelu(const DualTensor& x, const Tensor& slope) {
  require_pair(x);
  report_kinks(x.v);
  DualTensor out{zeros_like(x.v), zeros_like(x.v)};
  const std::int64_t c = x.v.dim(0);
  const std::int64_t plane = x.v.numel() / c;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float s = slope.data[static_cast<std::size_t>(ci)];
    const float* xv = x.v.ptr() + ci * plane;
    const float* xt = x.t.ptr() + ci * plane;
    float* ov = out.v.ptr() + ci * plane;
    float* ot = out.t.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      const bool on = xv[i] >= 0.0f;
      ov[i] = on ? xv[i] : s * xv[i];
      ot[i] = on ? xt[i] : s * xt[i];
    }
  }
  return out;
}

DualTensor sigmoid(const DualTensor& x) {
  require_pair(x);
  DualTensor out;
  out.v = sigmoid(x.v);
  out.t = zeros_like(x.t);
  const std::int64_t n = x.v.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    out.t.data[i] = out.v.data[i] * (1.0f - out.v.data[i]) * x.t.data[i];
  }
  return out;
}

DualTensor tanh_act(const DualTensor& x) {
  require_pair(x);
  DualTensor out;
  out.v = tanh_act(x.v);
  out.t = zeros_like(x.t);
  const std::int64_t n = x.v.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    out.t.data[i] = (1.0f - out.v.data[i] * out.v.data[i]) * x.t.data[i];
  }
  return out;
}

DualTensor softmax(const DualTensor& x, int axis) {
  require_pair(x);
  DualTensor out;
  out.v = softmax(x.v, axis);
  out.t = zeros_like(x.t);
  const std::int64_t len = x.v.dim(axis);
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.v.dim(i);
  for (int i = axis + 1; i < x.v.rank(); ++i) inner *= x.v.dim(i);
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const std::int64_t base = o * len * inner + in;
      double dot = 0.0;
      for (std::int64_t l = 0; l < len; ++l) {
        dot += static_cast<double>(out.v.data[base + l * inner]) * x.t.data[base + l * inner];
      }
      for (std::int64_t l = 0; l < len; ++l) {
        const std::int64_t i = base + l * inner;
        out.t.data[i] = out.v.data[i] * (x.t.data[i] - static_cast<float>(dot));
      }
    }
  }
  return out;
}

DualTensor interp_nearest_1d(const DualTensor& x, std::int64_t target_len) {
  require_pair(x);
  return {interp_nearest_1d(x.v, target_len), interp_nearest_1d(x.t, target_len)};
}
DualTensor interp_nearest_2d(const DualTensor& x, std::int64_t tt, std::int64_t tf) {
  require_pair(x);
  return {interp_nearest_2d(x.v, tt, tf), interp_nearest_2d(x.t, tt, tf)};
}
DualTensor adaptive_avg_pool_1d(const DualTensor& x, std::int64_t out_len) {
  require_pair(x);
  return {adaptive_avg_pool_1d(x.v, out_len), adaptive_avg_pool_1d(x.t, out_len)};
}
DualTensor adaptive_avg_pool_2d(const DualTensor& x, std::int64_t ot, std::int64_t of) {
  require_pair(x);
  return {adaptive_avg_pool_2d(x.v, ot, of), adaptive_avg_pool_2d(x.t, ot, of)};
}
DualTensor unfold_freq(const DualTensor& x, std::int64_t kernel, std::int64_t stride) {
  require_pair(x);
  return {unfold_freq(x.v, kernel, stride), unfold_freq(x.t, kernel, stride)};
}

DualTensor add(const DualTensor& a, const DualTensor& b) {
  return {add(a.v, b.v), add(a.t, b.t)};
}
DualTensor sub(const DualTensor& a, const DualTensor& b) {
  return {sub(a.v, b.v), sub(a.t, b.t)};
}
DualTensor mul(const DualTensor& a, const DualTensor& b) {
  return {mul(a.v, b.v), add(mul(a.t, b.v), mul(a.v, b.t))};
}
DualTensor scale(const DualTensor& a, float s) { return {scale(a.v, s), scale(a.t, s)}; }
DualTensor transpose12(const DualTensor& x) { return {transpose12(x.v), transpose12(x.t)}; }
DualTensor pad_end_1d(const DualTensor& x, std::int64_t pad) {
  return {pad_end_1d(x.v, pad), pad_end_1d(x.t, pad)};
}
DualTensor pad_end_2d(const DualTensor& x, std::int64_t pt, std::int64_t pf) {
  return {pad_end_2d(x.v, pt, pf), pad_end_2d(x.t, pt, pf)};
}
DualTensor slice_channels(const DualTensor& x, std::int64_t c0, std::int64_t c1) {
  return {slice_channels(x.v, c0, c1), slice_channels(x.t, c0, c1)};
}
DualTensor concat_channels(const DualTensor& a, const DualTensor& b) {
  return {concat_channels(a.v, b.v), concat_channels(a.t, b.t)};
}

DualSpectrogram stft(const DualWaveform& x, std::int64_t window, std::int64_t hop) {
  if (x.v.samples.size() != x.t.samples.size()) {
    throw shape_error("dual stft: tangent length != value length");
  }
  return {stft(x.v, window, hop), stft(x.t, window, hop)};
}

DualWaveform istft(const DualSpectrogram& spec, std::int64_t out_len) {
  return {istft(spec.v, out_len), istft(spec.t, out_len)};
}

DualTensor encode_audio(const DualSpectrogram& spec, const Tensor& w, const Tensor* b) {
  return {encode_audio(spec.v, w, b), encode_audio(spec.t, w, nullptr)};
}

DualWaveform decode_audio(const DualTensor& z, const Tensor& w, const Tensor* b,
                          std::int64_t window, std::int64_t hop, std::int64_t out_len) {
  require_pair(z);
  return {decode_audio(z.v, w, b, window, hop, out_len),
          decode_audio(z.t, w, nullptr, window, hop, out_len)};
}

}  // namespace rtfs
