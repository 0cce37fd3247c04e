#include "rtfs/tensor.h"

#include <cmath>
#include <sstream>

#include "kernels.h"

namespace rtfs {

Tensor::Tensor(std::vector<std::int64_t> d, float fill) : dims(std::move(d)) {
  const std::int64_t n = numel_of(dims);
  if (n < 0) throw shape_error("Tensor: negative dimension in " + dims_to_string(dims));
  data.assign(static_cast<std::size_t>(n), fill);
}

std::int64_t numel_of(const std::vector<std::int64_t>& dims) {
  std::int64_t n = 1;
  for (std::int64_t d : dims) {
    if (d < 0) return -1;
    n *= d;
  }
  return n;
}

std::string dims_to_string(const std::vector<std::int64_t>& dims) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << "x";
    os << dims[i];
  }
  os << "]";
  return os.str();
}

Tensor zeros_like(const Tensor& x) {
  Tensor out(x.dims);
  out.axes = x.axes;
  return out;
}

void check_finite(const char* op, const Tensor& x) {
  const float* p = x.ptr();
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) {
      throw numeric_error(std::string(op) + ": non-finite value at flat index " +
                          std::to_string(i));
    }
  }
}

bool same_dims(const Tensor& a, const Tensor& b) { return a.dims == b.dims; }

void require_dims(const char* op, const Tensor& x, const std::vector<std::int64_t>& dims) {
  if (x.dims != dims) {
    throw shape_error(std::string(op) + ": expected " + dims_to_string(dims) + ", got " +
                      dims_to_string(x.dims));
  }
}

namespace {
void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (!same_dims(a, b)) {
    throw shape_error(std::string(op) + ": dims mismatch " + dims_to_string(a.dims) + " vs " +
                      dims_to_string(b.dims));
  }
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  Tensor out = zeros_like(a);
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data[i] = a.data[i] + b.data[i];
  check_finite("add", out);
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  Tensor out = zeros_like(a);
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data[i] = a.data[i] - b.data[i];
  check_finite("sub", out);
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  Tensor out = zeros_like(a);
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data[i] = a.data[i] * b.data[i];
  check_finite("mul", out);
  return out;
}

Tensor scale(const Tensor& a, float s) {
  Tensor out = zeros_like(a);
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data[i] = a.data[i] * s;
  check_finite("scale", out);
  return out;
}

Tensor transpose12(const Tensor& x) {
  if (x.rank() != 3) throw shape_error("transpose12: expected rank-3 tensor");
  const std::int64_t c = x.dim(0), a = x.dim(1), b = x.dim(2);
  Tensor out({c, b, a});
  for (std::int64_t ci = 0; ci < c; ++ci) {
    detail::transpose2d(x.ptr() + ci * a * b, a, b, out.ptr() + ci * a * b);
  }
  if (x.axes.size() == 3) out.axes = {x.axes[0], x.axes[2], x.axes[1]};
  return out;
}

Tensor pad_end_1d(const Tensor& x, std::int64_t pad) {
  if (x.rank() != 2) throw shape_error("pad_end_1d: expected rank-2 tensor");
  if (pad < 0) throw shape_error("pad_end_1d: negative pad");
  const std::int64_t c = x.dim(0), t = x.dim(1);
  Tensor out({c, t + pad});
  out.axes = x.axes;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t ti = 0; ti < t; ++ti) out.at(ci, ti) = x.at(ci, ti);
  }
  return out;
}

Tensor pad_end_2d(const Tensor& x, std::int64_t pad_t, std::int64_t pad_f) {
  if (x.rank() != 3) throw shape_error("pad_end_2d: expected rank-3 tensor");
  if (pad_t < 0 || pad_f < 0) throw shape_error("pad_end_2d: negative pad");
  const std::int64_t c = x.dim(0), t = x.dim(1), f = x.dim(2);
  Tensor out({c, t + pad_t, f + pad_f});
  out.axes = x.axes;
  for (std::int64_t ci = 0; ci < c; ++ci)
    for (std::int64_t ti = 0; ti < t; ++ti)
      for (std::int64_t fi = 0; fi < f; ++fi) out.at(ci, ti, fi) = x.at(ci, ti, fi);
  return out;
}

Tensor slice_channels(const Tensor& x, std::int64_t c0, std::int64_t c1) {
  if (x.rank() < 1) throw shape_error("slice_channels: rank-0 tensor");
  if (c0 < 0 || c1 > x.dim(0) || c0 >= c1) throw shape_error("slice_channels: bad range");
  std::vector<std::int64_t> dims = x.dims;
  dims[0] = c1 - c0;
  Tensor out(dims);
  out.axes = x.axes;
  const std::int64_t plane = x.numel() / x.dim(0);
  std::copy(x.data.begin() + c0 * plane, x.data.begin() + c1 * plane, out.data.begin());
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() < 1) throw shape_error("concat_channels: rank mismatch");
  for (int i = 1; i < a.rank(); ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw shape_error("concat_channels: trailing dims mismatch " + dims_to_string(a.dims) +
                        " vs " + dims_to_string(b.dims));
    }
  }
  std::vector<std::int64_t> dims = a.dims;
  dims[0] = a.dim(0) + b.dim(0);
  Tensor out(dims);
  out.axes = a.axes;
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.numel());
  return out;
}

std::uint64_t Rng::next_u64() {
  // splitmix64
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

float Rng::uniform() {
  // 24-bit mantissa draw so every value is exactly representable
  return static_cast<float>(next_u64() >> 40) * (1.0f / 16777216.0f);
}

float Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  float u1 = uniform();
  while (u1 <= 1e-12f) u1 = uniform();
  const float u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(static_cast<double>(u1)));
  const double a = 2.0 * 3.14159265358979323846 * static_cast<double>(u2);
  spare_ = static_cast<float>(r * std::sin(a));
  have_spare_ = true;
  return static_cast<float>(r * std::cos(a));
}

}  // namespace rtfs
