#pragma once

// Spectral source separation: the mask and the encoded mixture are read as
// complex tensors over paired channel halves (top half real, bottom half
// imaginary) and combined by complex multiplication. The traditional plain
// elementwise mask is kept alongside for comparison.

#include "rtfs/layers.h"

namespace rtfs {

struct MaskWeights {
  PreluLayer prelu;
  ConvLayer conv;  // 1x1, C_a -> C_a
};

// m = ReLU(conv(PReLU(a_R))); nonnegative by construction.
Tensor make_mask(const Tensor& a_r, const MaskWeights& w);
DualTensor make_mask(const DualTensor& a_r, const MaskWeights& w);

// z_r = m_r.E_r - m_i.E_i ; z_i = m_r.E_i + m_i.E_r ; z = z_r || z_i
Tensor s3_apply(const Tensor& m, const Tensor& a0);
DualTensor s3_apply(const DualTensor& m, const DualTensor& a0);

// z = m . a0
Tensor mask_apply_baseline(const Tensor& m, const Tensor& a0);

}  // namespace rtfs
