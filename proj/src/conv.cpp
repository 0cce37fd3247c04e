#include "rtfs/conv.h"

#include <algorithm>
#include <string>
#include <vector>

#include "kernels.h"

namespace rtfs {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

void validate_spec(const char* op, const ConvSpec& s) {
  if (s.kh < 1 || s.kw < 1) throw shape_error(std::string(op) + ": kernel must be >= 1");
  if (s.stride < 1) throw shape_error(std::string(op) + ": stride must be >= 1");
  if (s.padding < 0) throw shape_error(std::string(op) + ": negative padding");
  if (s.groups < 1) throw shape_error(std::string(op) + ": groups must be >= 1");
  if (s.in_channels % s.groups != 0 || s.out_channels % s.groups != 0) {
    throw shape_error(std::string(op) + ": channels not divisible by groups");
  }
}

void validate_weights(const char* op, const ConvSpec& s, const Tensor& w, const Tensor* b) {
  const std::int64_t per_group_in = s.in_channels / s.groups;
  const std::int64_t per_group_out = s.out_channels / s.groups;
  const std::int64_t expect = s.transposed
                                  ? s.in_channels * per_group_out * s.kh * s.kw
                                  : s.out_channels * per_group_in * s.kh * s.kw;
  if (w.numel() != expect) {
    throw shape_error(std::string(op) + ": weight numel " + std::to_string(w.numel()) +
                      " does not match spec (expected " + std::to_string(expect) + ")");
  }
  if (w.rank() >= 1) {
    const std::int64_t lead = s.transposed ? s.in_channels : s.out_channels;
    if (w.dim(0) != lead) {
      throw shape_error(std::string(op) + ": weight leading dim " + std::to_string(w.dim(0)) +
                        " != " + std::to_string(lead));
    }
  }
  if (s.has_bias) {
    if (b == nullptr) throw shape_error(std::string(op) + ": bias tensor missing");
    if (b->numel() != s.out_channels) {
      throw shape_error(std::string(op) + ": bias numel " + std::to_string(b->numel()) +
                        " != out_channels");
    }
  }
}

// Shared 2D engine; 1D entry points set one spatial axis trivial.
Tensor conv2d_impl(const char* op, const Tensor& x, const ConvSpec& spec, const Tensor& w,
                   const Tensor* b, std::int64_t kh, std::int64_t kw, std::int64_t st,
                   std::int64_t sf, std::int64_t pt, std::int64_t pf) {
  const std::int64_t cin = spec.in_channels, cout = spec.out_channels, g = spec.groups;
  const std::int64_t cing = cin / g, coutg = cout / g;
  const std::int64_t t = x.dim(1), f = x.dim(2);
  if (x.dim(0) != cin) {
    throw shape_error(std::string(op) + ": input has " + std::to_string(x.dim(0)) +
                      " channels, spec expects " + std::to_string(cin));
  }

  std::int64_t to_n, fo_n;
  if (!spec.transposed) {
    to_n = (t + 2 * pt - kh) / st + 1;
    fo_n = (f + 2 * pf - kw) / sf + 1;
    if (t + 2 * pt < kh || f + 2 * pf < kw || to_n < 1 || fo_n < 1) {
      throw shape_error(std::string(op) + ": zero-size output for input " +
                        dims_to_string(x.dims));
    }
  } else {
    to_n = (t - 1) * st - 2 * pt + kh;
    fo_n = (f - 1) * sf - 2 * pf + kw;
    if (to_n < 1 || fo_n < 1) {
      throw shape_error(std::string(op) + ": zero-size transposed output for input " +
                        dims_to_string(x.dims));
    }
  }

  Tensor out({cout, to_n, fo_n});
  if (x.axes.size() == 3) out.axes = x.axes;
  const float* xp = x.ptr();
  const float* wp = w.ptr();
  const float* bp = (spec.has_bias && b) ? b->ptr() : nullptr;

  // 1x1 stride-1 ungrouped convolution is a plain matrix product.
  if (!spec.transposed && kh == 1 && kw == 1 && st == 1 && sf == 1 && pt == 0 && pf == 0 &&
      g == 1) {
    const std::int64_t p = t * f;
    std::vector<float> xt(static_cast<std::size_t>(p * cin));
    detail::transpose2d(xp, cin, p, xt.data());
    std::vector<float> y(static_cast<std::size_t>(p * cout));
    detail::matmul_nt(xt.data(), wp, y.data(), p, cout, cin);
    float* op_ = out.ptr();
    detail::transpose2d(y.data(), p, cout, op_);
    if (bp) {
      for (std::int64_t co = 0; co < cout; ++co) {
        float* row = op_ + co * p;
        const float bv = bp[co];
        for (std::int64_t i = 0; i < p; ++i) row[i] += bv;
      }
    }
    check_finite(op, out);
    return out;
  }

  const std::int64_t work = cout * to_n * fo_n * cing * kh * kw;
  const std::int64_t grain = work > (1 << 20) ? 1 : cout;

  if (!spec.transposed) {
    detail::parallel_for(cout, grain, [&](std::int64_t co0, std::int64_t co1) {
      for (std::int64_t co = co0; co < co1; ++co) {
        float* plane = out.ptr() + co * to_n * fo_n;
        const float init = bp ? bp[co] : 0.0f;
        for (std::int64_t i = 0; i < to_n * fo_n; ++i) plane[i] = init;
        const std::int64_t gi = co / coutg;
        for (std::int64_t cig = 0; cig < cing; ++cig) {
          const std::int64_t ci = gi * cing + cig;
          const float* xplane = xp + ci * t * f;
          for (std::int64_t ki = 0; ki < kh; ++ki) {
            for (std::int64_t kj = 0; kj < kw; ++kj) {
              const float wv = wp[((co * cing + cig) * kh + ki) * kw + kj];
              for (std::int64_t to = 0; to < to_n; ++to) {
                const std::int64_t ti = to * st - pt + ki;
                if (ti < 0 || ti >= t) continue;
                const std::int64_t fo_lo = std::max<std::int64_t>(0, ceil_div(pf - kj, sf));
                const std::int64_t fo_hi =
                    std::min<std::int64_t>(fo_n - 1, floor_div(f - 1 + pf - kj, sf));
                float* orow = plane + to * fo_n;
                const float* xrow = xplane + ti * f;
                if (sf == 1) {
                  const std::int64_t fi0 = fo_lo - pf + kj;
                  const std::int64_t n = fo_hi - fo_lo + 1;
                  if (n > 0) detail::axpy(n, wv, xrow + fi0, orow + fo_lo);
                } else {
                  for (std::int64_t fo = fo_lo; fo <= fo_hi; ++fo) {
                    orow[fo] += wv * xrow[fo * sf - pf + kj];
                  }
                }
              }
            }
          }
        }
      }
    });
  } else {
    detail::parallel_for(cout, grain, [&](std::int64_t co0, std::int64_t co1) {
      for (std::int64_t co = co0; co < co1; ++co) {
        float* plane = out.ptr() + co * to_n * fo_n;
        const float init = bp ? bp[co] : 0.0f;
        for (std::int64_t i = 0; i < to_n * fo_n; ++i) plane[i] = init;
        const std::int64_t gi = co / coutg;
        const std::int64_t cog = co - gi * coutg;
        for (std::int64_t cig = 0; cig < cing; ++cig) {
          const std::int64_t ci = gi * cing + cig;
          const float* xplane = xp + ci * t * f;
          for (std::int64_t ki = 0; ki < kh; ++ki) {
            for (std::int64_t kj = 0; kj < kw; ++kj) {
              const float wv = wp[((ci * coutg + cog) * kh + ki) * kw + kj];
              for (std::int64_t to = 0; to < to_n; ++to) {
                const std::int64_t tnum = to + pt - ki;
                if (tnum < 0 || tnum % st != 0) continue;
                const std::int64_t ti = tnum / st;
                if (ti >= t) continue;
                float* orow = plane + to * fo_n;
                const float* xrow = xplane + ti * f;
                if (sf == 1) {
                  // fi = fo + pf - kj
                  const std::int64_t fo_lo = std::max<std::int64_t>(0, kj - pf);
                  const std::int64_t fo_hi = std::min<std::int64_t>(fo_n - 1, f - 1 - pf + kj);
                  const std::int64_t n = fo_hi - fo_lo + 1;
                  if (n > 0) detail::axpy(n, wv, xrow + fo_lo + pf - kj, orow + fo_lo);
                } else {
                  for (std::int64_t fo = 0; fo < fo_n; ++fo) {
                    const std::int64_t fnum = fo + pf - kj;
                    if (fnum < 0 || fnum % sf != 0) continue;
                    const std::int64_t fi = fnum / sf;
                    if (fi >= f) continue;
                    orow[fo] += wv * xrow[fi];
                  }
                }
              }
            }
          }
        }
      }
    });
  }
  check_finite(op, out);
  return out;
}

}  // namespace

std::int64_t conv_out_len(std::int64_t in, std::int64_t k, std::int64_t stride,
                          std::int64_t pad, bool transposed) {
  if (transposed) return (in - 1) * stride - 2 * pad + k;
  return (in + 2 * pad - k) / stride + 1;
}

Tensor conv2d(const Tensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b) {
  validate_spec("conv2d", spec);
  validate_weights("conv2d", spec, w, b);
  if (x.rank() != 3) throw shape_error("conv2d: expected C x T x F input");
  return conv2d_impl("conv2d", x, spec, w, b, spec.kh, spec.kw, spec.stride, spec.stride,
                     spec.padding, spec.padding);
}

Tensor conv1d(const Tensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b) {
  validate_spec("conv1d", spec);
  validate_weights("conv1d", spec, w, b);
  if (x.rank() != 2) throw shape_error("conv1d: expected C x T input");
  Tensor x3({x.dim(0), x.dim(1), 1});
  x3.data = x.data;
  Tensor y3 = conv2d_impl("conv1d", x3, spec, w, b, spec.kh, 1, spec.stride, 1, spec.padding, 0);
  Tensor out({y3.dim(0), y3.dim(1)});
  out.data = std::move(y3.data);
  out.axes = x.axes;
  return out;
}

Tensor conv1d_sliced(const Tensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b) {
  validate_spec("conv1d_sliced", spec);
  validate_weights("conv1d_sliced", spec, w, b);
  if (x.rank() != 3) throw shape_error("conv1d_sliced: expected C x S x L input");
  return conv2d_impl("conv1d_sliced", x, spec, w, b, 1, spec.kh, 1, spec.stride, 0,
                     spec.padding);
}

}  // namespace rtfs
