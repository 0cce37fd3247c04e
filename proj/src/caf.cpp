#include "rtfs/caf.h"

#include <string>

namespace rtfs {

namespace {

// mean over h channel chunks: (C*h) x T -> C x T
Tensor head_mean(const Tensor& x, std::int64_t h) {
  const std::int64_t c = x.dim(0) / h, t = x.dim(1);
  Tensor out({c, t});
  const float inv = 1.0f / static_cast<float>(h);
  for (std::int64_t ci = 0; ci < c; ++ci) {
    float* orow = out.ptr() + ci * t;
    for (std::int64_t j = 0; j < h; ++j) {
      const float* xr = x.ptr() + (j * c + ci) * t;
      for (std::int64_t ti = 0; ti < t; ++ti) orow[ti] += xr[ti];
    }
    for (std::int64_t ti = 0; ti < t; ++ti) orow[ti] *= inv;
  }
  return out;
}

DualTensor head_mean(const DualTensor& x, std::int64_t h) {
  return {head_mean(x.v, h), head_mean(x.t, h)};
}

// out[c, t, f] = x[c, t, f] * m[c, t]
Tensor mul_over_freq(const Tensor& x, const Tensor& m) {
  const std::int64_t c = x.dim(0), t = x.dim(1), f = x.dim(2);
  Tensor out = zeros_like(x);
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t ti = 0; ti < t; ++ti) {
      const float mv = m.at(ci, ti);
      const float* xr = x.ptr() + (ci * t + ti) * f;
      float* orow = out.ptr() + (ci * t + ti) * f;
      for (std::int64_t fi = 0; fi < f; ++fi) orow[fi] = mv * xr[fi];
    }
  }
  return out;
}

DualTensor mul_over_freq(const DualTensor& x, const DualTensor& m) {
  return {mul_over_freq(x.v, m.v), add(mul_over_freq(x.t, m.v), mul_over_freq(x.v, m.t))};
}

template <class T>
T caf_forward_t(const T& a1, const T& v1, const CafWeights& w) {
  if (rank_of(a1) != 3 || rank_of(v1) != 2) {
    throw shape_error("caf_forward: expected audio C_a x T_a x F and visual C_v x T_v");
  }
  const std::int64_t ca = dims_of(a1)[0];
  const std::int64_t cv = dims_of(v1)[0];
  const std::int64_t ta = dims_of(a1)[1];
  if (cv % ca != 0) {
    throw shape_error("caf_forward: C_v = " + std::to_string(cv) +
                      " not divisible by C_a = " + std::to_string(ca));
  }

  T a_val = apply_norm(w.p1n, apply_conv(w.p1, a1));
  T a_gate = relu(apply_norm(w.p2n, apply_conv(w.p2, a1)));

  // attention fusion: h visual sub-representations, head mean, channel
  // softmax, then nearest interpolation onto the audio frame rate
  T v_h = apply_norm(w.f1n, apply_conv(w.f1, v1));
  T v_m = head_mean(v_h, w.heads);
  T v_attn = interp_nearest_1d(softmax(v_m, 0), ta);
  T f1 = mul_over_freq(a_val, v_attn);

  // gated fusion: visual keys expanded through the audio gates
  T v_key = interp_nearest_1d(apply_norm(w.f2n, apply_conv(w.f2, v1)), ta);
  T f2 = mul_over_freq(a_gate, v_key);

  return add(f1, f2);
}

}  // namespace

Tensor caf_forward(const Tensor& a1, const Tensor& v1, const CafWeights& w) {
  return caf_forward_t<Tensor>(a1, v1, w);
}

DualTensor caf_forward(const DualTensor& a1, const DualTensor& v1, const CafWeights& w) {
  return caf_forward_t<DualTensor>(a1, v1, w);
}

}  // namespace rtfs
