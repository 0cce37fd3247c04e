#include "rtfs/rtfs_block.h"

#include <string>

namespace rtfs {

namespace {

// kernel-4 depth-wise conv preserving spatial dims: one extra zero row/col
// at the end plus symmetric padding 1 gives the (1, 2) split a stride-1
// kernel-4 window needs.
template <class T>
T conv_same_k4(const ConvLayer& l, const T& x) {
  if (rank_of(x) == 2) return conv1d(pad_end_1d(x, 1), l.spec, *l.w, l.b);
  return conv2d(pad_end_2d(x, 1, 1), l.spec, *l.w, l.b);
}

template <class T>
T interp_to(const T& x, const std::vector<std::int64_t>& target) {
  if (rank_of(x) == 2) return interp_nearest_1d(x, target[1]);
  return interp_nearest_2d(x, target[1], target[2]);
}

template <class T>
T tf_ar_unit_t(const T& m, const T& n, const TfArUnit& u) {
  const auto& md = dims_of(m);
  const auto& nd = dims_of(n);
  if (md.size() != nd.size() || md[0] != nd[0]) {
    throw shape_error("tf_ar_unit: channel mismatch between m " + dims_to_string(md) +
                      " and n " + dims_to_string(nd));
  }
  for (std::size_t i = 1; i < md.size(); ++i) {
    if (nd[i] > md[i]) throw shape_error("tf_ar_unit: n spatial dims exceed m's");
  }
  T gate = sigmoid(apply_norm(u.n1, conv_same_k4(u.w1, n)));
  T body = apply_norm(u.n2, conv_same_k4(u.w2, m));
  T skip = apply_norm(u.n3, conv_same_k4(u.w3, n));
  return add(mul(interp_to(gate, md), body), interp_to(skip, md));
}

template <class T, class Set>
std::pair<Set, T> compress_t(const T& a, const RtfsWeights& w) {
  const auto& dims = dims_of(a);
  if (rank_of(a) != 3) throw shape_error("compress: expected C x T x F input");
  const std::int64_t min_grid = std::int64_t{1} << (w.q - 1);
  if (w.q < 1 || dims[1] < min_grid || dims[2] < min_grid) {
    throw shape_error("compress: grid " + dims_to_string(dims) + " too small for q = " +
                      std::to_string(w.q));
  }
  Set set;
  set.scales.push_back(apply_conv(w.reduce, a));
  for (const ConvLayer& down : w.down) {
    set.scales.push_back(apply_conv(down, set.scales.back()));
  }
  const auto& coarse = dims_of(set.scales.back());
  T a_g = adaptive_avg_pool_2d(set.scales[0], coarse[1], coarse[2]);
  for (std::size_t i = 1; i < set.scales.size(); ++i) {
    a_g = add(a_g, adaptive_avg_pool_2d(set.scales[i], coarse[1], coarse[2]));
  }
  return {std::move(set), std::move(a_g)};
}

template <class T>
T sequence_path(const T& x, const DualPathWeights& w, std::int64_t kernel) {
  // unfold the last axis, normalize, run the SRU over each slice, restore
  // the axis with the transposed conv; residual is added by the caller
  T u = unfold_freq(x, kernel, 1);
  u = apply_norm(w.ln, u);
  T r = sru_forward_batch(u, w.sru);
  return apply_conv_sliced(w.deconv, r);
}

template <class T>
T dual_path_t(const T& a_g, const RtfsWeights& w) {
  const auto& dims = dims_of(a_g);
  if (rank_of(a_g) != 3) throw shape_error("dual_path: expected D x T x F input");
  if (dims[2] < w.unfold_kernel || dims[1] < w.unfold_kernel) {
    throw shape_error("dual_path: grid " + dims_to_string(dims) +
                      " smaller than unfold kernel " + std::to_string(w.unfold_kernel));
  }
  T r_f = add(sequence_path(a_g, w.freq, w.unfold_kernel), a_g);
  T r_t_raw = sequence_path(transpose12(r_f), w.time, w.unfold_kernel);
  T r_t = add(transpose12(r_t_raw), r_f);
  return add(tf_attention(r_t, w.attn), r_t);
}

template <class T, class Set>
T reconstruct_t(const Set& scales, const T& a_g_bar, const RtfsWeights& w) {
  const std::size_t q = scales.scales.size();
  if (q == 0) throw shape_error("reconstruct: empty multi-scale set");
  if (w.tfar.size() != 2 * q - 1) {
    throw shape_error("reconstruct: expected " + std::to_string(2 * q - 1) + " TF-AR units");
  }
  std::vector<T> fused;
  fused.reserve(q);
  for (std::size_t i = 0; i < q; ++i) {
    fused.push_back(tf_ar_unit_t<T>(scales.scales[i], a_g_bar, w.tfar[i]));
  }
  T acc = fused[q - 1];
  for (std::size_t step = 0; step < q - 1; ++step) {
    const std::size_t j = q - 2 - step;
    acc = add(tf_ar_unit_t<T>(fused[j], acc, w.tfar[q + step]), scales.scales[j]);
  }
  return acc;
}

template <class T, class Set>
T rtfs_forward_t(const T& a, const RtfsWeights& w) {
  auto [set, a_g] = compress_t<T, Set>(a, w);
  T a_g_bar = dual_path_t<T>(a_g, w);
  T b0 = reconstruct_t<T, Set>(set, a_g_bar, w);
  return apply_conv(w.restore, b0);
}

}  // namespace

Tensor tf_ar_unit(const Tensor& m, const Tensor& n, const TfArUnit& u) {
  return tf_ar_unit_t<Tensor>(m, n, u);
}
DualTensor tf_ar_unit(const DualTensor& m, const DualTensor& n, const TfArUnit& u) {
  return tf_ar_unit_t<DualTensor>(m, n, u);
}

std::pair<MultiScaleSet, Tensor> compress(const Tensor& a, const RtfsWeights& w) {
  return compress_t<Tensor, MultiScaleSet>(a, w);
}
std::pair<DualMultiScaleSet, DualTensor> compress(const DualTensor& a, const RtfsWeights& w) {
  return compress_t<DualTensor, DualMultiScaleSet>(a, w);
}

Tensor dual_path(const Tensor& a_g, const RtfsWeights& w) { return dual_path_t<Tensor>(a_g, w); }
DualTensor dual_path(const DualTensor& a_g, const RtfsWeights& w) {
  return dual_path_t<DualTensor>(a_g, w);
}

Tensor reconstruct(const MultiScaleSet& scales, const Tensor& a_g_bar, const RtfsWeights& w) {
  return reconstruct_t<Tensor, MultiScaleSet>(scales, a_g_bar, w);
}
DualTensor reconstruct(const DualMultiScaleSet& scales, const DualTensor& a_g_bar,
                       const RtfsWeights& w) {
  return reconstruct_t<DualTensor, DualMultiScaleSet>(scales, a_g_bar, w);
}

Tensor rtfs_forward(const Tensor& a, const RtfsWeights& w) {
  return rtfs_forward_t<Tensor, MultiScaleSet>(a, w);
}
DualTensor rtfs_forward(const DualTensor& a, const RtfsWeights& w) {
  return rtfs_forward_t<DualTensor, DualMultiScaleSet>(a, w);
}

}  // namespace rtfs
