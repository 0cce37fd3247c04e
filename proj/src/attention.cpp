#include "rtfs/attention.h"

#include <cmath>
#include <vector>

#include "kernels.h"

namespace rtfs {

Tensor frame_gram(const Tensor& q, const Tensor& k, float scl) {
  if (q.rank() != 2 || k.rank() != 2 || q.dim(0) != k.dim(0)) {
    throw shape_error("frame_gram: expected matching C x N maps");
  }
  const std::int64_t c = q.dim(0), n1 = q.dim(1), n2 = k.dim(1);
  std::vector<float> qt(static_cast<std::size_t>(c * n1));
  std::vector<float> kt(static_cast<std::size_t>(c * n2));
  detail::transpose2d(q.ptr(), c, n1, qt.data());
  detail::transpose2d(k.ptr(), c, n2, kt.data());
  Tensor out({n1, n2});
  detail::matmul_nt(qt.data(), kt.data(), out.ptr(), n1, n2, c);
  for (auto& v : out.data) v *= scl;
  check_finite("frame_gram", out);
  return out;
}

DualTensor frame_gram(const DualTensor& q, const DualTensor& k, float scl) {
  return {frame_gram(q.v, k.v, scl),
          add(frame_gram(q.t, k.v, scl), frame_gram(q.v, k.t, scl))};
}

Tensor apply_attn(const Tensor& scores, const Tensor& v) {
  if (scores.rank() != 2 || v.rank() != 2 || scores.dim(1) != v.dim(1)) {
    throw shape_error("apply_attn: scores " + dims_to_string(scores.dims) +
                      " do not match values " + dims_to_string(v.dims));
  }
  const std::int64_t cv = v.dim(0), t = scores.dim(0), t2 = scores.dim(1);
  Tensor out({cv, t});
  detail::matmul_nt(v.ptr(), scores.ptr(), out.ptr(), cv, t, t2);
  check_finite("apply_attn", out);
  return out;
}

DualTensor apply_attn(const DualTensor& scores, const DualTensor& v) {
  return {apply_attn(scores.v, v.v), add(apply_attn(scores.t, v.v), apply_attn(scores.v, v.t))};
}

Tensor fold_freq_to_channel(const Tensor& x) {
  if (x.rank() != 3) throw shape_error("fold_freq_to_channel: expected C x T x F");
  const std::int64_t c = x.dim(0), t = x.dim(1), f = x.dim(2);
  Tensor out({c * f, t});
  for (std::int64_t ci = 0; ci < c; ++ci) {
    // per channel: transpose T x F -> F x T
    detail::transpose2d(x.ptr() + ci * t * f, t, f, out.ptr() + ci * f * t);
  }
  return out;
}

DualTensor fold_freq_to_channel(const DualTensor& x) {
  return {fold_freq_to_channel(x.v), fold_freq_to_channel(x.t)};
}

Tensor unfold_channel_to_freq(const Tensor& x, std::int64_t channels, std::int64_t freq) {
  if (x.rank() != 2 || x.dim(0) != channels * freq) {
    throw shape_error("unfold_channel_to_freq: bad folded shape");
  }
  const std::int64_t t = x.dim(1);
  Tensor out({channels, t, freq});
  for (std::int64_t ci = 0; ci < channels; ++ci) {
    detail::transpose2d(x.ptr() + ci * freq * t, freq, t, out.ptr() + ci * t * freq);
  }
  return out;
}

DualTensor unfold_channel_to_freq(const DualTensor& x, std::int64_t channels, std::int64_t freq) {
  return {unfold_channel_to_freq(x.v, channels, freq),
          unfold_channel_to_freq(x.t, channels, freq)};
}

namespace {

template <class T>
T tf_attention_t(const T& x, const TfAttentionWeights& w) {
  const auto& dims = dims_of(x);
  if (rank_of(x) != 3) throw shape_error("tf_attention: expected D x T x F input");
  const std::int64_t d = dims[0], f = dims[2];
  const std::int64_t n_heads = static_cast<std::int64_t>(w.heads.size());
  if (n_heads < 1 || d % n_heads != 0) {
    throw shape_error("tf_attention: channel count not divisible by head count");
  }
  const float scl =
      1.0f / std::sqrt(static_cast<float>(w.qk_channels) * static_cast<float>(f));

  T cat;
  bool first = true;
  for (const AttnHead& head : w.heads) {
    T q = apply_norm(head.qn, apply_prelu(head.qp, apply_conv(head.q, x)));
    T k = apply_norm(head.kn, apply_prelu(head.kp, apply_conv(head.k, x)));
    T v = apply_norm(head.vn, apply_prelu(head.vp, apply_conv(head.v, x)));
    T scores = softmax(frame_gram(fold_freq_to_channel(q), fold_freq_to_channel(k), scl), 1);
    T o = unfold_channel_to_freq(apply_attn(scores, fold_freq_to_channel(v)), d / n_heads, f);
    cat = first ? o : concat_channels(cat, o);
    first = false;
  }
  return apply_norm(w.outn, apply_prelu(w.outp, apply_conv(w.out, cat)));
}

}  // namespace

Tensor tf_attention(const Tensor& x, const TfAttentionWeights& w) {
  return tf_attention_t<Tensor>(x, w);
}

DualTensor tf_attention(const DualTensor& x, const TfAttentionWeights& w) {
  return tf_attention_t<DualTensor>(x, w);
}

Tensor tf_attention_scores(const Tensor& x, const TfAttentionWeights& w, std::size_t head) {
  if (head >= w.heads.size()) throw shape_error("tf_attention_scores: head out of range");
  const AttnHead& h = w.heads[head];
  const float scl = 1.0f / std::sqrt(static_cast<float>(w.qk_channels) *
                                     static_cast<float>(x.dim(2)));
  Tensor q = apply_norm(h.qn, apply_prelu(h.qp, apply_conv(h.q, x)));
  Tensor k = apply_norm(h.kn, apply_prelu(h.kp, apply_conv(h.k, x)));
  return softmax(frame_gram(fold_freq_to_channel(q), fold_freq_to_channel(k), scl), 1);
}

}  // namespace rtfs
