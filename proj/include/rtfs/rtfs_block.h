#pragma once

// The core separation unit: compress the TF grid to D channels and a
// coarse resolution, model frequency then time with SRU stacks, apply
// TF self-attention, and rebuild the original resolution with gated
// attention-reconstruction (TF-AR) units arranged as a U-Net.

#include <utility>
#include <vector>

#include "rtfs/attention.h"
#include "rtfs/layers.h"
#include "rtfs/sru.h"

namespace rtfs {

// One TF-AR unit: I(m, n) = interp(sigmoid(W1(n))) . W2(m) + interp(W3(n)),
// each W a depth-wise kernel-4 conv (2D or 1D by input rank) with same-style
// padding, followed by a norm layer.
struct TfArUnit {
  ConvLayer w1, w2, w3;
  NormLayer n1, n2, n3;
};

Tensor tf_ar_unit(const Tensor& m, const Tensor& n, const TfArUnit& u);
DualTensor tf_ar_unit(const DualTensor& m, const DualTensor& n, const TfArUnit& u);

struct DualPathWeights {
  NormLayer ln;  // channel LN over the unfolded channels
  SruStack sru;
  ConvLayer deconv;  // transposed conv restoring the unfolded axis
};

struct RtfsWeights {
  ConvLayer reduce;             // C_a -> D, 1x1
  std::vector<ConvLayer> down;  // q-1 depth-wise 4x4 stride-2 convs
  DualPathWeights freq, time;
  TfAttentionWeights attn;
  std::vector<TfArUnit> tfar;  // 2q-1 units: q fusing + q-1 upward
  ConvLayer restore;           // D -> C_a, 1x1
  std::int64_t q = 2;
  std::int64_t unfold_kernel = 8;
};

struct MultiScaleSet {
  std::vector<Tensor> scales;  // A_0 (finest) ... A_{q-1} (coarsest)
};
struct DualMultiScaleSet {
  std::vector<DualTensor> scales;
};

std::pair<MultiScaleSet, Tensor> compress(const Tensor& a, const RtfsWeights& w);
std::pair<DualMultiScaleSet, DualTensor> compress(const DualTensor& a, const RtfsWeights& w);

Tensor dual_path(const Tensor& a_g, const RtfsWeights& w);
DualTensor dual_path(const DualTensor& a_g, const RtfsWeights& w);

Tensor reconstruct(const MultiScaleSet& scales, const Tensor& a_g_bar, const RtfsWeights& w);
DualTensor reconstruct(const DualMultiScaleSet& scales, const DualTensor& a_g_bar,
                       const RtfsWeights& w);

Tensor rtfs_forward(const Tensor& a, const RtfsWeights& w);
DualTensor rtfs_forward(const DualTensor& a, const RtfsWeights& w);

}  // namespace rtfs
