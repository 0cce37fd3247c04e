#include "rtfs/ops.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace rtfs {

Tensor relu(const Tensor& x) {
  Tensor out = zeros_like(x);
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data[i] = x.data[i] > 0.0f ? x.data[i] : 0.0f;
  return out;
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
  if (x.rank() < 1 || slope.numel() != x.dim(0)) {
    throw shape_error("prelu: slope length " + std::to_string(slope.numel()) +
                      " != channel count");
  }
  Tensor out = zeros_like(x);
  const std::int64_t c = x.dim(0);
  const std::int64_t plane = x.numel() / c;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float s = slope.data[static_cast<std::size_t>(ci)];
    const float* xr = x.ptr() + ci * plane;
    float* orow = out.ptr() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) orow[i] = xr[i] >= 0.0f ? xr[i] : s * xr[i];
  }
  check_finite("prelu", out);
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = zeros_like(x);
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data[i] = 1.0f / (1.0f + std::exp(-x.data[i]));
  return out;
}

Tensor tanh_act(const Tensor& x) {
  Tensor out = zeros_like(x);
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data[i] = std::tanh(x.data[i]);
  return out;
}

Tensor softmax(const Tensor& x, int axis) {
  if (axis < 0 || axis >= x.rank()) throw shape_error("softmax: axis out of range");
  const std::int64_t len = x.dim(axis);
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  for (int i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);

  Tensor out = zeros_like(x);
  const float* xp = x.ptr();
  float* op = out.ptr();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const std::int64_t base = o * len * inner + in;
      float mx = xp[base];
      for (std::int64_t l = 1; l < len; ++l) mx = std::max(mx, xp[base + l * inner]);
      double sum = 0.0;
      for (std::int64_t l = 0; l < len; ++l) {
        const float e = std::exp(xp[base + l * inner] - mx);
        op[base + l * inner] = e;
        sum += e;
      }
      const float inv = static_cast<float>(1.0 / sum);
      for (std::int64_t l = 0; l < len; ++l) op[base + l * inner] *= inv;
    }
  }
  check_finite("softmax", out);
  return out;
}

namespace {
std::vector<std::int64_t> nearest_index(std::int64_t in_len, std::int64_t out_len) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(out_len));
  for (std::int64_t i = 0; i < out_len; ++i) {
    idx[static_cast<std::size_t>(i)] = i * in_len / out_len;
  }
  return idx;
}
}  // namespace

Tensor interp_nearest_1d(const Tensor& x, std::int64_t target_len) {
  if (x.rank() != 2) throw shape_error("interp_nearest_1d: expected C x N input");
  if (target_len <= 0) throw shape_error("interp_nearest_1d: target length must be positive");
  const std::int64_t c = x.dim(0), n = x.dim(1);
  const auto idx = nearest_index(n, target_len);
  Tensor out({c, target_len});
  out.axes = x.axes;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float* xr = x.ptr() + ci * n;
    float* orow = out.ptr() + ci * target_len;
    for (std::int64_t i = 0; i < target_len; ++i) orow[i] = xr[idx[static_cast<std::size_t>(i)]];
  }
  return out;
}

Tensor interp_nearest_2d(const Tensor& x, std::int64_t target_t, std::int64_t target_f) {
  if (x.rank() != 3) throw shape_error("interp_nearest_2d: expected C x T x F input");
  if (target_t <= 0 || target_f <= 0) {
    throw shape_error("interp_nearest_2d: target lengths must be positive");
  }
  const std::int64_t c = x.dim(0), t = x.dim(1), f = x.dim(2);
  const auto ti = nearest_index(t, target_t);
  const auto fi = nearest_index(f, target_f);
  Tensor out({c, target_t, target_f});
  out.axes = x.axes;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t to = 0; to < target_t; ++to) {
      const float* xr = x.ptr() + (ci * t + ti[static_cast<std::size_t>(to)]) * f;
      float* orow = out.ptr() + (ci * target_t + to) * target_f;
      for (std::int64_t fo = 0; fo < target_f; ++fo) orow[fo] = xr[fi[static_cast<std::size_t>(fo)]];
    }
  }
  return out;
}

namespace {
struct Bin {
  std::int64_t lo, hi;  // [lo, hi)
};
std::vector<Bin> pool_bins(std::int64_t in, std::int64_t out) {
  std::vector<Bin> bins(static_cast<std::size_t>(out));
  for (std::int64_t i = 0; i < out; ++i) {
    const std::int64_t lo = i * in / out;
    const std::int64_t hi = ((i + 1) * in + out - 1) / out;  // ceil
    bins[static_cast<std::size_t>(i)] = {lo, hi};
  }
  return bins;
}
}  // namespace

Tensor adaptive_avg_pool_1d(const Tensor& x, std::int64_t out_len) {
  if (x.rank() != 2) throw shape_error("adaptive_avg_pool_1d: expected C x N input");
  if (out_len <= 0 || out_len > x.dim(1)) {
    throw shape_error("adaptive_avg_pool_1d: bad output length");
  }
  const std::int64_t c = x.dim(0), n = x.dim(1);
  const auto bins = pool_bins(n, out_len);
  Tensor out({c, out_len});
  out.axes = x.axes;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const float* xr = x.ptr() + ci * n;
    float* orow = out.ptr() + ci * out_len;
    for (std::int64_t i = 0; i < out_len; ++i) {
      const Bin b = bins[static_cast<std::size_t>(i)];
      double s = 0.0;
      for (std::int64_t j = b.lo; j < b.hi; ++j) s += xr[j];
      orow[i] = static_cast<float>(s / static_cast<double>(b.hi - b.lo));
    }
  }
  return out;
}

Tensor adaptive_avg_pool_2d(const Tensor& x, std::int64_t out_t, std::int64_t out_f) {
  if (x.rank() != 3) throw shape_error("adaptive_avg_pool_2d: expected C x T x F input");
  if (out_t <= 0 || out_t > x.dim(1) || out_f <= 0 || out_f > x.dim(2)) {
    throw shape_error("adaptive_avg_pool_2d: bad output dims");
  }
  const std::int64_t c = x.dim(0), t = x.dim(1), f = x.dim(2);
  const auto tb = pool_bins(t, out_t);
  const auto fb = pool_bins(f, out_f);
  Tensor out({c, out_t, out_f});
  out.axes = x.axes;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t to = 0; to < out_t; ++to) {
      const Bin bt = tb[static_cast<std::size_t>(to)];
      float* orow = out.ptr() + (ci * out_t + to) * out_f;
      for (std::int64_t fo = 0; fo < out_f; ++fo) {
        const Bin bf = fb[static_cast<std::size_t>(fo)];
        double s = 0.0;
        for (std::int64_t ti = bt.lo; ti < bt.hi; ++ti) {
          const float* xr = x.ptr() + (ci * t + ti) * f;
          for (std::int64_t fi = bf.lo; fi < bf.hi; ++fi) s += xr[fi];
        }
        orow[fo] = static_cast<float>(s / static_cast<double>((bt.hi - bt.lo) * (bf.hi - bf.lo)));
      }
    }
  }
  return out;
}

std::int64_t unfold_pad(std::int64_t len, std::int64_t kernel, std::int64_t stride) {
  const std::int64_t m = ((len - kernel) % stride + stride) % stride;
  return (stride - m) % stride;
}

std::int64_t unfold_out_len(std::int64_t len, std::int64_t kernel, std::int64_t stride) {
  return (len + unfold_pad(len, kernel, stride) - kernel) / stride + 1;
}

Tensor unfold_freq(const Tensor& x, std::int64_t kernel, std::int64_t stride) {
  if (x.rank() != 3) throw shape_error("unfold_freq: expected C x T x F input");
  if (kernel < 1 || stride < 1) throw shape_error("unfold_freq: bad kernel/stride");
  const std::int64_t c = x.dim(0), t = x.dim(1), f = x.dim(2);
  const std::int64_t pad = unfold_pad(f, kernel, stride);
  if (f + pad < kernel) {
    throw shape_error("unfold_freq: kernel " + std::to_string(kernel) +
                      " exceeds padded length " + std::to_string(f + pad));
  }
  const std::int64_t fo_n = (f + pad - kernel) / stride + 1;
  Tensor out({c * kernel, t, fo_n});
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t j = 0; j < kernel; ++j) {
      float* oplane = out.ptr() + (ci * kernel + j) * t * fo_n;
      for (std::int64_t ti = 0; ti < t; ++ti) {
        const float* xr = x.ptr() + (ci * t + ti) * f;
        float* orow = oplane + ti * fo_n;
        for (std::int64_t w = 0; w < fo_n; ++w) {
          const std::int64_t fi = w * stride + j;
          orow[w] = fi < f ? xr[fi] : 0.0f;
        }
      }
    }
  }
  return out;
}

}  // namespace rtfs
