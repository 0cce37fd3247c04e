#pragma once

// Normalization primitives. gln normalizes with one mean/variance over the
// whole tensor (all axes jointly); channel_ln normalizes across channels at
// each spatial position; bn_affine is inference-mode batch norm, a pure
// per-channel affine map from stored running statistics. All of them apply
// a per-channel affine (gamma, beta) afterwards. Reductions accumulate in
// double.

#include "rtfs/tensor.h"

namespace rtfs {

inline constexpr float kNormEps = 1e-5f;

Tensor gln(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = kNormEps);

Tensor channel_ln(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps = kNormEps);

Tensor bn_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                 const Tensor& var, float eps = kNormEps);

}  // namespace rtfs
