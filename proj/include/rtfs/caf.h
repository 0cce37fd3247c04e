#pragma once

// Cross-dimensional attention fusion: the visual stream produces per-channel
// attention (softmaxed head mean) that scales every frequency slice of the
// audio "values", and a visual "key" that every frequency slice of the
// ReLU-gated audio stream multiplies back into the TF grid.

#include "rtfs/layers.h"

namespace rtfs {

struct CafWeights {
  ConvLayer p1;  // depth-wise 1x1 on the audio, value branch
  NormLayer p1n;
  ConvLayer p2;  // depth-wise 1x1 on the audio, gate branch
  NormLayer p2n;
  ConvLayer f1;  // grouped 1D conv C_v -> C_a*h
  NormLayer f1n;
  ConvLayer f2;  // grouped 1D conv C_v -> C_a
  NormLayer f2n;
  std::int64_t heads = 4;
};

// a1: C_a x T_a x F, v1: C_v x T_v -> C_a x T_a x F
Tensor caf_forward(const Tensor& a1, const Tensor& v1, const CafWeights& w);
DualTensor caf_forward(const DualTensor& a1, const DualTensor& v1, const CafWeights& w);

}  // namespace rtfs
