#pragma once

// Remaining tensor primitives: activations, nearest-neighbour interpolation,
// adaptive average pooling and the frequency-axis unfold.

#include "rtfs/tensor.h"

namespace rtfs {

Tensor relu(const Tensor& x);
// slope holds one learned slope per channel (axis 0)
Tensor prelu(const Tensor& x, const Tensor& slope);
Tensor sigmoid(const Tensor& x);
Tensor tanh_act(const Tensor& x);

// Softmax along `axis` with max subtraction; sums to 1 along that axis.
Tensor softmax(const Tensor& x, int axis);

// out[i] = in[floor(i * N / M)] on the interpolated axis.
Tensor interp_nearest_1d(const Tensor& x, std::int64_t target_len);      // C x N -> C x M
Tensor interp_nearest_2d(const Tensor& x, std::int64_t target_t,
                         std::int64_t target_f);                         // C x T x F

// Bin i covers [floor(i*In/Out), ceil((i+1)*In/Out)); output is the bin mean.
Tensor adaptive_avg_pool_1d(const Tensor& x, std::int64_t out_len);      // C x N
Tensor adaptive_avg_pool_2d(const Tensor& x, std::int64_t out_t, std::int64_t out_f);

// Sliding windows over the last axis, flattened into channels:
// C x T x F -> (C*kernel) x T x F'. The input is right zero-padded by
// (stride - (F - kernel) mod stride) mod stride; output channel c*kernel + j
// holds window tap j of input channel c.
Tensor unfold_freq(const Tensor& x, std::int64_t kernel, std::int64_t stride);
std::int64_t unfold_pad(std::int64_t len, std::int64_t kernel, std::int64_t stride);
std::int64_t unfold_out_len(std::int64_t len, std::int64_t kernel, std::int64_t stride);

}  // namespace rtfs
