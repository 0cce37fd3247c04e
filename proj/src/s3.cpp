#include "rtfs/s3.h"

#include <string>

namespace rtfs {

namespace {

template <class T>
T make_mask_t(const T& a_r, const MaskWeights& w) {
  return relu(apply_conv(w.conv, apply_prelu(w.prelu, a_r)));
}

template <class T>
T s3_apply_t(const T& m, const T& a0) {
  const auto& md = dims_of(m);
  if (md != dims_of(a0)) {
    throw shape_error("s3_apply: mask dims " + dims_to_string(md) + " != features " +
                      dims_to_string(dims_of(a0)));
  }
  const std::int64_t c = md[0];
  if (c % 2 != 0) throw shape_error("s3_apply: channel count must be even");
  const std::int64_t half = c / 2;
  T mr = slice_channels(m, 0, half);
  T mi = slice_channels(m, half, c);
  T er = slice_channels(a0, 0, half);
  T ei = slice_channels(a0, half, c);
  T zr = sub(mul(mr, er), mul(mi, ei));
  T zi = add(mul(mr, ei), mul(mi, er));
  return concat_channels(zr, zi);
}

}  // namespace

Tensor make_mask(const Tensor& a_r, const MaskWeights& w) { return make_mask_t<Tensor>(a_r, w); }
DualTensor make_mask(const DualTensor& a_r, const MaskWeights& w) {
  return make_mask_t<DualTensor>(a_r, w);
}

Tensor s3_apply(const Tensor& m, const Tensor& a0) { return s3_apply_t<Tensor>(m, a0); }
DualTensor s3_apply(const DualTensor& m, const DualTensor& a0) {
  return s3_apply_t<DualTensor>(m, a0);
}

Tensor mask_apply_baseline(const Tensor& m, const Tensor& a0) { return mul(m, a0); }

}  // namespace rtfs
