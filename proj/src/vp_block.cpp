#include "rtfs/vp_block.h"

#include <cmath>
#include <string>

namespace rtfs {

namespace {

template <class T>
T mhsa_t(const T& x, const MhsaWeights& w) {
  if (rank_of(x) != 2) throw shape_error("mhsa: expected C x N input");
  const std::int64_t c = dims_of(x)[0];
  if (w.heads < 1 || c % w.heads != 0) {
    throw shape_error("mhsa: channels not divisible by head count");
  }
  const std::int64_t dh = c / w.heads;
  const float scl = 1.0f / std::sqrt(static_cast<float>(dh));

  T q = apply_conv(w.q, x);
  T k = apply_conv(w.k, x);
  T v = apply_conv(w.v, x);
  T cat;
  for (std::int64_t hd = 0; hd < w.heads; ++hd) {
    T qh = slice_channels(q, hd * dh, (hd + 1) * dh);
    T kh = slice_channels(k, hd * dh, (hd + 1) * dh);
    T vh = slice_channels(v, hd * dh, (hd + 1) * dh);
    T scores = softmax(frame_gram(qh, kh, scl), 1);
    T oh = apply_attn(scores, vh);
    cat = hd == 0 ? oh : concat_channels(cat, oh);
  }
  return apply_conv(w.out, cat);
}

template <class T>
T ffn_t(const T& x, const FfnWeights& w) {
  T y = relu(apply_norm(w.c1n, apply_conv(w.c1, x)));
  y = apply_norm(w.dwn, apply_conv(w.dw, y));
  return apply_conv(w.c2, y);
}

template <class T>
T vp_forward_t(const T& v0, const VpWeights& w) {
  if (rank_of(v0) != 2) throw shape_error("vp_forward: expected C_v x T_v input");
  const std::int64_t tv = dims_of(v0)[1];
  if (tv < (std::int64_t{1} << w.q)) {
    throw shape_error("vp_forward: T_v = " + std::to_string(tv) + " too short for " +
                      std::to_string(w.q) + " downsamplings");
  }
  if (w.down.size() != static_cast<std::size_t>(w.q) ||
      w.tfar.size() != static_cast<std::size_t>(2 * w.q + 1)) {
    throw shape_error("vp_forward: weight set inconsistent with q");
  }

  std::vector<T> scales;
  scales.push_back(apply_norm(w.projn, apply_conv(w.proj, v0)));
  for (std::int64_t i = 0; i < w.q; ++i) {
    scales.push_back(apply_norm(w.downn[static_cast<std::size_t>(i)],
                                apply_conv(w.down[static_cast<std::size_t>(i)], scales.back())));
  }

  const std::int64_t coarse = dims_of(scales.back())[1];
  T v_g = adaptive_avg_pool_1d(scales[0], coarse);
  for (std::size_t i = 1; i < scales.size(); ++i) {
    v_g = add(v_g, adaptive_avg_pool_1d(scales[i], coarse));
  }

  // transformer refinement of the pooled summary
  T a = add(v_g, mhsa_t<T>(apply_norm(w.attn_norm, v_g), w.attn));
  T v_g_bar = add(a, ffn_t<T>(apply_norm(w.ffn_norm, a), w.ffn));

  std::vector<T> fused;
  fused.reserve(scales.size());
  for (std::size_t i = 0; i < scales.size(); ++i) {
    fused.push_back(tf_ar_unit(scales[i], v_g_bar, w.tfar[i]));
  }
  T acc = fused.back();
  const std::size_t n = scales.size();
  for (std::size_t step = 0; step < n - 1; ++step) {
    const std::size_t j = n - 2 - step;
    acc = add(tf_ar_unit(fused[j], acc, w.tfar[n + step]), scales[j]);
  }
  return add(apply_conv(w.restore, acc), v0);
}

}  // namespace

Tensor mhsa_forward(const Tensor& x, const MhsaWeights& w) { return mhsa_t<Tensor>(x, w); }
DualTensor mhsa_forward(const DualTensor& x, const MhsaWeights& w) {
  return mhsa_t<DualTensor>(x, w);
}

Tensor mhsa_scores(const Tensor& x, const MhsaWeights& w, std::int64_t head) {
  const std::int64_t c = x.dim(0);
  const std::int64_t dh = c / w.heads;
  if (head < 0 || head >= w.heads) throw shape_error("mhsa_scores: head out of range");
  const float scl = 1.0f / std::sqrt(static_cast<float>(dh));
  Tensor q = apply_conv(w.q, x);
  Tensor k = apply_conv(w.k, x);
  Tensor qh = slice_channels(q, head * dh, (head + 1) * dh);
  Tensor kh = slice_channels(k, head * dh, (head + 1) * dh);
  return softmax(frame_gram(qh, kh, scl), 1);
}

Tensor vp_forward(const Tensor& v0, const VpWeights& w) { return vp_forward_t<Tensor>(v0, w); }
DualTensor vp_forward(const DualTensor& v0, const VpWeights& w) {
  return vp_forward_t<DualTensor>(v0, w);
}

}  // namespace rtfs
