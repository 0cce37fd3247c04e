#pragma once

// Simple Recurrent Unit stack. Per layer and direction, with input x_t:
//   (x~, f^, r^) = W x_t                      (split in thirds)
//   f_t = sigmoid(f^ + v_f . c_{t-1} + b_f)
//   c_t = f_t . c_{t-1} + (1 - f_t) . x~
//   r_t = sigmoid(r^ + v_r . c_t + b_r)
//   h_t = r_t . c_t + (1 - r_t) . x'_t
// where x'_t is the highway input: x_t itself when d_in == hidden, otherwise
// a learned per-layer projection of x_t. The W matmul is timestep
// independent, so it runs as one batched product; only the elementwise
// recurrence is serial. Initial state is zero and nothing carries over
// between calls.

#include <vector>

#include "rtfs/dual.h"
#include "rtfs/tensor.h"

namespace rtfs {

struct SruLayerWeights {
  const Tensor* w = nullptr;    // [3h x d_in]
  const Tensor* vf = nullptr;   // [h]
  const Tensor* vr = nullptr;   // [h]
  const Tensor* bf = nullptr;   // [h]
  const Tensor* br = nullptr;   // [h]
  const Tensor* hw = nullptr;   // [h x d_in], present iff d_in != h
  bool reverse = false;
};

struct SruLayer {
  SruLayerWeights fwd;
  SruLayerWeights bwd;  // valid only when the stack is bidirectional
};

struct SruStack {
  std::vector<SruLayer> layers;
  std::int64_t input_dim = 0;
  std::int64_t hidden = 0;
  bool bidirectional = true;
};

// seq: d_in x N -> (2h x N) bidirectional, (h x N) otherwise.
Tensor sru_forward(const Tensor& seq, const SruStack& stack);

// Batched form over S independent sequences laid out as d_in x S x N; the
// dual-path block feeds one sequence per time (or frequency) slice.
Tensor sru_forward_batch(const Tensor& x, const SruStack& stack);

DualTensor sru_forward(const DualTensor& seq, const SruStack& stack);
DualTensor sru_forward_batch(const DualTensor& x, const SruStack& stack);

}  // namespace rtfs
