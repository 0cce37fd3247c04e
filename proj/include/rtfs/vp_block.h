#pragma once

// Visual preprocessing: the 1D counterpart of the RTFS block. Compresses the
// frame axis with strided depth-wise convs, refines the pooled summary with
// a small transformer (MHSA + convolutional FFN), and rebuilds the frame
// axis through 1D TF-AR units. Normalization throughout is inference-mode
// batch norm.

#include <vector>

#include "rtfs/layers.h"
#include "rtfs/rtfs_block.h"

namespace rtfs {

struct MhsaWeights {
  ConvLayer q, k, v, out;  // 1x1 convs over the time axis
  std::int64_t heads = 8;
};

struct FfnWeights {
  ConvLayer c1;  // hidden -> ffn, 1x1
  NormLayer c1n;
  ConvLayer dw;  // depth-wise kernel 5, pad 2
  NormLayer dwn;
  ConvLayer c2;  // ffn -> hidden, 1x1
};

struct VpWeights {
  ConvLayer proj;  // C_v -> hidden, 1x1
  NormLayer projn;
  std::vector<ConvLayer> down;  // q_v depth-wise kernel-4 stride-2 convs
  std::vector<NormLayer> downn;
  NormLayer attn_norm;
  MhsaWeights attn;
  NormLayer ffn_norm;
  FfnWeights ffn;
  std::vector<TfArUnit> tfar;  // 2*q_v + 1 units
  ConvLayer restore;           // hidden -> C_v, 1x1
  std::int64_t q = 4;
};

// v0: C_v x T_v -> C_v x T_v (requires T_v >= 2^q_v)
Tensor vp_forward(const Tensor& v0, const VpWeights& w);
DualTensor vp_forward(const DualTensor& v0, const VpWeights& w);

Tensor mhsa_forward(const Tensor& x, const MhsaWeights& w);
DualTensor mhsa_forward(const DualTensor& x, const MhsaWeights& w);
// Softmaxed attention matrix of one head; test hook.
Tensor mhsa_scores(const Tensor& x, const MhsaWeights& w, std::int64_t head);

}  // namespace rtfs
