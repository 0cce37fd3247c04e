#pragma once

// Weight-binding structs shared by all blocks. These hold non-owning
// pointers into a WeightStore (the store outlives any graph built from it)
// plus the layer hyperparameters, and dispatch to the tensor primitives for
// both plain and dual flavours.

#include "rtfs/conv.h"
#include "rtfs/dual.h"
#include "rtfs/norms.h"
#include "rtfs/ops.h"

namespace rtfs {

struct ConvLayer {
  ConvSpec spec;
  const Tensor* w = nullptr;
  const Tensor* b = nullptr;
};

struct NormLayer {
  enum class Kind { gln, cln, bn };
  Kind kind = Kind::gln;
  const Tensor* gamma = nullptr;
  const Tensor* beta = nullptr;
  const Tensor* mean = nullptr;  // bn only
  const Tensor* var = nullptr;   // bn only
};

struct PreluLayer {
  const Tensor* slope = nullptr;
};

template <class T>
T apply_conv(const ConvLayer& l, const T& x) {
  if (rank_of(x) == 2) return conv1d(x, l.spec, *l.w, l.b);
  return conv2d(x, l.spec, *l.w, l.b);
}

template <class T>
T apply_conv_sliced(const ConvLayer& l, const T& x) {
  return conv1d_sliced(x, l.spec, *l.w, l.b);
}

template <class T>
T apply_norm(const NormLayer& n, const T& x) {
  switch (n.kind) {
    case NormLayer::Kind::gln:
      return gln(x, *n.gamma, *n.beta);
    case NormLayer::Kind::cln:
      return channel_ln(x, *n.gamma, *n.beta);
    case NormLayer::Kind::bn:
      return bn_affine(x, *n.gamma, *n.beta, *n.mean, *n.var);
  }
  throw shape_error("apply_norm: bad kind");
}

template <class T>
T apply_prelu(const PreluLayer& p, const T& x) {
  return prelu(x, *p.slope);
}

}  // namespace rtfs
