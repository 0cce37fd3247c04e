#pragma once

// Forward-mode directional derivatives. A DualTensor carries a primal value
// and a tangent that every primitive propagates by the chain rule, so block
// forwards templated on the tensor type compute exact JVPs with a single
// shared dataflow. ReLU/PReLU use the right-derivative at their kinks and
// report how close probe points came to one via an optional thread-local
// monitor (used by the smoothness audit to discard risky probes).

#include "rtfs/conv.h"
#include "rtfs/norms.h"
#include "rtfs/ops.h"
#include "rtfs/stft.h"
#include "rtfs/tensor.h"

namespace rtfs {

struct DualTensor {
  Tensor v;  // primal
  Tensor t;  // tangent, same shape
};

struct DualWaveform {
  Waveform v;
  Waveform t;
};

struct DualSpectrogram {
  ComplexSpectrogram v;
  ComplexSpectrogram t;
};

DualTensor make_dual(Tensor value, Tensor tangent);
DualTensor lift(const Tensor& value);  // zero tangent

inline int rank_of(const Tensor& x) { return x.rank(); }
inline int rank_of(const DualTensor& x) { return x.v.rank(); }
inline const std::vector<std::int64_t>& dims_of(const Tensor& x) { return x.dims; }
inline const std::vector<std::int64_t>& dims_of(const DualTensor& x) { return x.v.dims; }
inline const Tensor& value_of(const Tensor& x) { return x; }
inline const Tensor& value_of(const DualTensor& x) { return x.v; }

// Kink proximity reporting for the smoothness audit.
struct KinkMonitor {
  float min_abs = 1e30f;
};
KinkMonitor* set_kink_monitor(KinkMonitor* m);  // returns the previous monitor

// --- primitive overloads ----------------------------------------------------

DualTensor conv2d(const DualTensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b);
DualTensor conv1d(const DualTensor& x, const ConvSpec& spec, const Tensor& w, const Tensor* b);
DualTensor conv1d_sliced(const DualTensor& x, const ConvSpec& spec, const Tensor& w,
                         const Tensor* b);

DualTensor gln(const DualTensor& x, const Tensor& gamma, const Tensor& beta,
               float eps = kNormEps);
DualTensor channel_ln(const DualTensor& x, const Tensor& gamma, const Tensor& beta,
                      float eps = kNormEps);
DualTensor bn_affine(const DualTensor& x, const Tensor& gamma, const Tensor& beta,
                     const Tensor& mean, const Tensor& var, float eps = kNormEps);

DualTensor relu(const DualTensor& x);
DualTensor prelu(const DualTensor& x, const Tensor& slope);
DualTensor sigmoid(const DualTensor& x);
DualTensor tanh_act(const DualTensor& x);
DualTensor softmax(const DualTensor& x, int axis);

DualTensor interp_nearest_1d(const DualTensor& x, std::int64_t target_len);
DualTensor interp_nearest_2d(const DualTensor& x, std::int64_t target_t, std::int64_t target_f);
DualTensor adaptive_avg_pool_1d(const DualTensor& x, std::int64_t out_len);
DualTensor adaptive_avg_pool_2d(const DualTensor& x, std::int64_t out_t, std::int64_t out_f);
DualTensor unfold_freq(const DualTensor& x, std::int64_t kernel, std::int64_t stride);

DualTensor add(const DualTensor& a, const DualTensor& b);
DualTensor sub(const DualTensor& a, const DualTensor& b);
DualTensor mul(const DualTensor& a, const DualTensor& b);  // product rule
DualTensor scale(const DualTensor& a, float s);
DualTensor transpose12(const DualTensor& x);
DualTensor pad_end_1d(const DualTensor& x, std::int64_t pad);
DualTensor pad_end_2d(const DualTensor& x, std::int64_t pad_t, std::int64_t pad_f);
DualTensor slice_channels(const DualTensor& x, std::int64_t c0, std::int64_t c1);
DualTensor concat_channels(const DualTensor& a, const DualTensor& b);

DualSpectrogram stft(const DualWaveform& x, std::int64_t window = 256, std::int64_t hop = 128);
DualWaveform istft(const DualSpectrogram& spec, std::int64_t out_len);
DualTensor encode_audio(const DualSpectrogram& spec, const Tensor& w, const Tensor* b);
DualWaveform decode_audio(const DualTensor& z, const Tensor& w, const Tensor* b,
                          std::int64_t window, std::int64_t hop, std::int64_t out_len);

}  // namespace rtfs
