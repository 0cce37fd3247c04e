#pragma once

// TF-domain self-attention over time frames. Per head, 1x1 convs (+PReLU,
// channel LN) produce E-channel queries/keys and D/heads-channel values;
// the frequency axis is folded into the feature axis so the T' x T'
// attention matrix spans frames. The caller owns the residual connection.

#include <vector>

#include "rtfs/layers.h"

namespace rtfs {

struct AttnHead {
  ConvLayer q, k, v;
  PreluLayer qp, kp, vp;
  NormLayer qn, kn, vn;
};

struct TfAttentionWeights {
  std::vector<AttnHead> heads;
  ConvLayer out;
  PreluLayer outp;
  NormLayer outn;
  std::int64_t qk_channels = 4;  // E
};

Tensor tf_attention(const Tensor& x, const TfAttentionWeights& w);
DualTensor tf_attention(const DualTensor& x, const TfAttentionWeights& w);

// Softmaxed attention matrix of one head (row t attends over frames); test
// and inspection hook.
Tensor tf_attention_scores(const Tensor& x, const TfAttentionWeights& w, std::size_t head);

// Shared attention arithmetic, also used by the visual block's MHSA.
// frame_gram: scale * Q^T K over 2D [C x N] maps -> [N x N].
Tensor frame_gram(const Tensor& q, const Tensor& k, float scl);
DualTensor frame_gram(const DualTensor& q, const DualTensor& k, float scl);
// apply_attn: out[:, t] = sum_t2 scores[t, t2] * v[:, t2].
Tensor apply_attn(const Tensor& scores, const Tensor& v);
DualTensor apply_attn(const DualTensor& scores, const DualTensor& v);
// fold C x T x F <-> (C*F) x T with (c, f) row order.
Tensor fold_freq_to_channel(const Tensor& x);
DualTensor fold_freq_to_channel(const DualTensor& x);
Tensor unfold_channel_to_freq(const Tensor& x, std::int64_t channels, std::int64_t freq);
DualTensor unfold_channel_to_freq(const DualTensor& x, std::int64_t channels, std::int64_t freq);

}  // namespace rtfs
