#pragma once

// 1D/2D convolutions (cross-correlation, no kernel flip) and their
// transposed variants. Weight layouts follow the usual deep-learning
// convention:
//   forward     w[c_out][c_in/groups][kh][kw]
//   transposed  w[c_in][c_out/groups][kh][kw]
// Accumulation is float with a fixed (c_in, kh, kw) order.

#include <cstdint>
#include <optional>

#include "rtfs/tensor.h"

namespace rtfs {

struct ConvSpec {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kh = 1;  // kernel; kh doubles as "k" for 1D
  std::int64_t kw = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  std::int64_t groups = 1;
  bool has_bias = true;
  bool transposed = false;

  static ConvSpec conv1d(std::int64_t cin, std::int64_t cout, std::int64_t k,
                         std::int64_t stride = 1, std::int64_t pad = 0, std::int64_t groups = 1,
                         bool bias = true, bool transposed = false) {
    return ConvSpec{cin, cout, k, 1, stride, pad, groups, bias, transposed};
  }
  static ConvSpec conv2d(std::int64_t cin, std::int64_t cout, std::int64_t kh, std::int64_t kw,
                         std::int64_t stride = 1, std::int64_t pad = 0, std::int64_t groups = 1,
                         bool bias = true, bool transposed = false) {
    return ConvSpec{cin, cout, kh, kw, stride, pad, groups, bias, transposed};
  }
};

// floor((in + 2 pad - k) / stride) + 1, or the transposed inverse map.
std::int64_t conv_out_len(std::int64_t in, std::int64_t k, std::int64_t stride,
                          std::int64_t pad, bool transposed);

// x: C x T -> C' x T'
Tensor conv1d(const Tensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b);

// x: C x T x F -> C' x T' x F'
Tensor conv2d(const Tensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b);

// 1D convolution along the LAST axis of a rank-3 tensor, applied
// independently per middle-axis slice: C x S x L -> C' x S x L'.
// This is how the dual-path sequence restorers run one conv per time or
// frequency slice without materializing each slice.
Tensor conv1d_sliced(const Tensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b);

}  // namespace rtfs
