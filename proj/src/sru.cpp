#include "rtfs/sru.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kernels.h"

namespace rtfs {

namespace {

inline float sigm(float x) { return 1.0f / (1.0f + std::exp(-x)); }

void validate_layer(const SruLayerWeights& lw, std::int64_t d, std::int64_t h, const char* what) {
  const std::string tag = std::string("sru:") + what;
  if (!lw.w || lw.w->numel() != 3 * h * d) {
    throw shape_error(tag + ": W must be [3h x d_in] = [" + std::to_string(3 * h) + " x " +
                      std::to_string(d) + "]");
  }
  for (const Tensor* t : {lw.vf, lw.vr, lw.bf, lw.br}) {
    if (!t || t->numel() != h) throw shape_error(tag + ": recurrence vectors must have length h");
  }
  if (d != h) {
    if (!lw.hw || lw.hw->numel() != h * d) {
      throw shape_error(tag + ": highway projection [h x d_in] required when d_in != h");
    }
  }
}

struct DirBuffers {
  std::vector<float> g;        // [P x 3h]
  std::vector<float> xh;       // [P x h] when projected, else unused
  const float* xh_rows = nullptr;
  std::int64_t xh_stride = 0;
  std::vector<float> out;      // [P x h]
};

// One direction of one layer over S sequences of length N, position-major
// inputs. Deterministic: each (slice, step) is computed in a fixed order.
void run_direction(const SruLayerWeights& lw, const float* x_pm, std::int64_t s_count,
                   std::int64_t n_len, std::int64_t d, std::int64_t h, DirBuffers& buf) {
  const std::int64_t p = s_count * n_len;
  buf.g.resize(static_cast<std::size_t>(p * 3 * h));
  detail::matmul_nt(x_pm, lw.w->ptr(), buf.g.data(), p, 3 * h, d);
  if (d != h) {
    buf.xh.resize(static_cast<std::size_t>(p * h));
    detail::matmul_nt(x_pm, lw.hw->ptr(), buf.xh.data(), p, h, d);
    buf.xh_rows = buf.xh.data();
    buf.xh_stride = h;
  } else {
    buf.xh_rows = x_pm;
    buf.xh_stride = d;
  }
  buf.out.resize(static_cast<std::size_t>(p * h));

  const float* vf = lw.vf->ptr();
  const float* vr = lw.vr->ptr();
  const float* bf = lw.bf->ptr();
  const float* br = lw.br->ptr();
  const bool rev = lw.reverse;
  const float* g = buf.g.data();
  const float* xh = buf.xh_rows;
  const std::int64_t xh_stride = buf.xh_stride;
  float* out = buf.out.data();

  detail::parallel_for(s_count, 8, [=](std::int64_t s0, std::int64_t s1) {
    std::vector<float> c(static_cast<std::size_t>(h));
    for (std::int64_t s = s0; s < s1; ++s) {
      std::fill(c.begin(), c.end(), 0.0f);
      for (std::int64_t step = 0; step < n_len; ++step) {
        const std::int64_t n = rev ? n_len - 1 - step : step;
        const std::int64_t idx = s * n_len + n;
        const float* grow = g + idx * 3 * h;
        const float* hrow = xh + idx * xh_stride;
        float* orow = out + idx * h;
        for (std::int64_t j = 0; j < h; ++j) {
          const float xt = grow[j];
          const float f = sigm(grow[h + j] + vf[j] * c[static_cast<std::size_t>(j)] + bf[j]);
          const float cn = f * c[static_cast<std::size_t>(j)] + (1.0f - f) * xt;
          const float r = sigm(grow[2 * h + j] + vr[j] * cn + br[j]);
          orow[j] = r * cn + (1.0f - r) * hrow[j];
          c[static_cast<std::size_t>(j)] = cn;
        }
      }
    }
  });
}

void run_direction_dual(const SruLayerWeights& lw, const float* x_pm, const float* xt_pm,
                        std::int64_t s_count, std::int64_t n_len, std::int64_t d, std::int64_t h,
                        DirBuffers& buf, DirBuffers& tbuf) {
  const std::int64_t p = s_count * n_len;
  buf.g.resize(static_cast<std::size_t>(p * 3 * h));
  tbuf.g.resize(static_cast<std::size_t>(p * 3 * h));
  detail::matmul_nt(x_pm, lw.w->ptr(), buf.g.data(), p, 3 * h, d);
  detail::matmul_nt(xt_pm, lw.w->ptr(), tbuf.g.data(), p, 3 * h, d);
  if (d != h) {
    buf.xh.resize(static_cast<std::size_t>(p * h));
    tbuf.xh.resize(static_cast<std::size_t>(p * h));
    detail::matmul_nt(x_pm, lw.hw->ptr(), buf.xh.data(), p, h, d);
    detail::matmul_nt(xt_pm, lw.hw->ptr(), tbuf.xh.data(), p, h, d);
    buf.xh_rows = buf.xh.data();
    tbuf.xh_rows = tbuf.xh.data();
    buf.xh_stride = tbuf.xh_stride = h;
  } else {
    buf.xh_rows = x_pm;
    tbuf.xh_rows = xt_pm;
    buf.xh_stride = tbuf.xh_stride = d;
  }
  buf.out.resize(static_cast<std::size_t>(p * h));
  tbuf.out.resize(static_cast<std::size_t>(p * h));

  const float* vf = lw.vf->ptr();
  const float* vr = lw.vr->ptr();
  const float* bf = lw.bf->ptr();
  const float* br = lw.br->ptr();
  const bool rev = lw.reverse;
  const float* g = buf.g.data();
  const float* gt = tbuf.g.data();
  const float* xh = buf.xh_rows;
  const float* xht = tbuf.xh_rows;
  const std::int64_t xh_stride = buf.xh_stride;
  float* out = buf.out.data();
  float* outt = tbuf.out.data();

  detail::parallel_for(s_count, 8, [=](std::int64_t s0, std::int64_t s1) {
    std::vector<float> c(static_cast<std::size_t>(h));
    std::vector<float> dc(static_cast<std::size_t>(h));
    for (std::int64_t s = s0; s < s1; ++s) {
      std::fill(c.begin(), c.end(), 0.0f);
      std::fill(dc.begin(), dc.end(), 0.0f);
      for (std::int64_t step = 0; step < n_len; ++step) {
        const std::int64_t n = rev ? n_len - 1 - step : step;
        const std::int64_t idx = s * n_len + n;
        const float* grow = g + idx * 3 * h;
        const float* gtrow = gt + idx * 3 * h;
        const float* hrow = xh + idx * xh_stride;
        const float* htrow = xht + idx * xh_stride;
        float* orow = out + idx * h;
        float* otrow = outt + idx * h;
        for (std::int64_t j = 0; j < h; ++j) {
          const std::size_t jz = static_cast<std::size_t>(j);
          const float xt = grow[j], dxt = gtrow[j];
          const float f = sigm(grow[h + j] + vf[j] * c[jz] + bf[j]);
          const float df = f * (1.0f - f) * (gtrow[h + j] + vf[j] * dc[jz]);
          const float cn = f * c[jz] + (1.0f - f) * xt;
          const float dcn = df * (c[jz] - xt) + f * dc[jz] + (1.0f - f) * dxt;
          const float r = sigm(grow[2 * h + j] + vr[j] * cn + br[j]);
          const float dr = r * (1.0f - r) * (gtrow[2 * h + j] + vr[j] * dcn);
          orow[j] = r * cn + (1.0f - r) * hrow[j];
          otrow[j] = dr * (cn - hrow[j]) + r * dcn + (1.0f - r) * htrow[j];
          c[jz] = cn;
          dc[jz] = dcn;
        }
      }
    }
  });
}

void validate_stack(const SruStack& stack, const Tensor& x) {
  if (x.rank() != 3) throw shape_error("sru: expected d_in x S x N input");
  if (stack.layers.empty()) throw shape_error("sru: empty stack");
  if (x.dim(2) < 1) throw shape_error("sru: sequence length must be >= 1 (N == 0)");
  if (x.dim(0) != stack.input_dim) {
    throw shape_error("sru: input dim " + std::to_string(x.dim(0)) + " != stack input_dim " +
                      std::to_string(stack.input_dim));
  }
}

}  // namespace

Tensor sru_forward_batch(const Tensor& x, const SruStack& stack) {
  validate_stack(stack, x);
  const std::int64_t s_count = x.dim(1), n_len = x.dim(2);
  const std::int64_t p = s_count * n_len;
  const std::int64_t h = stack.hidden;
  const std::int64_t dirs = stack.bidirectional ? 2 : 1;

  Tensor cur = x;
  std::vector<float> x_pm;
  DirBuffers fwd, bwd;
  for (std::size_t li = 0; li < stack.layers.size(); ++li) {
    const std::int64_t d = cur.dim(0);
    const std::int64_t expect = li == 0 ? stack.input_dim : dirs * h;
    if (d != expect) throw shape_error("sru: layer " + std::to_string(li) + " input dim mismatch");
    validate_layer(stack.layers[li].fwd, d, h, "fwd");
    if (stack.bidirectional) validate_layer(stack.layers[li].bwd, d, h, "bwd");

    x_pm.resize(static_cast<std::size_t>(p * d));
    detail::transpose2d(cur.ptr(), d, p, x_pm.data());

    run_direction(stack.layers[li].fwd, x_pm.data(), s_count, n_len, d, h, fwd);
    if (stack.bidirectional) {
      run_direction(stack.layers[li].bwd, x_pm.data(), s_count, n_len, d, h, bwd);
    }

    Tensor next({dirs * h, s_count, n_len});
    detail::transpose2d(fwd.out.data(), p, h, next.ptr());
    if (stack.bidirectional) detail::transpose2d(bwd.out.data(), p, h, next.ptr() + h * p);
    cur = std::move(next);
  }
  check_finite("sru_forward", cur);
  return cur;
}

Tensor sru_forward(const Tensor& seq, const SruStack& stack) {
  if (seq.rank() != 2) throw shape_error("sru_forward: expected d_in x N sequence");
  Tensor x({seq.dim(0), 1, seq.dim(1)});
  x.data = seq.data;
  Tensor y = sru_forward_batch(x, stack);
  Tensor out({y.dim(0), y.dim(2)});
  out.data = std::move(y.data);
  return out;
}

DualTensor sru_forward_batch(const DualTensor& x, const SruStack& stack) {
  validate_stack(stack, x.v);
  if (!same_dims(x.v, x.t)) throw shape_error("sru: tangent dims mismatch");
  const std::int64_t s_count = x.v.dim(1), n_len = x.v.dim(2);
  const std::int64_t p = s_count * n_len;
  const std::int64_t h = stack.hidden;
  const std::int64_t dirs = stack.bidirectional ? 2 : 1;

  Tensor cur = x.v, curt = x.t;
  std::vector<float> x_pm, xt_pm;
  DirBuffers fwd, bwd, fwdt, bwdt;
  for (std::size_t li = 0; li < stack.layers.size(); ++li) {
    const std::int64_t d = cur.dim(0);
    validate_layer(stack.layers[li].fwd, d, h, "fwd");
    if (stack.bidirectional) validate_layer(stack.layers[li].bwd, d, h, "bwd");

    x_pm.resize(static_cast<std::size_t>(p * d));
    xt_pm.resize(static_cast<std::size_t>(p * d));
    detail::transpose2d(cur.ptr(), d, p, x_pm.data());
    detail::transpose2d(curt.ptr(), d, p, xt_pm.data());

    run_direction_dual(stack.layers[li].fwd, x_pm.data(), xt_pm.data(), s_count, n_len, d, h,
                       fwd, fwdt);
    if (stack.bidirectional) {
      run_direction_dual(stack.layers[li].bwd, x_pm.data(), xt_pm.data(), s_count, n_len, d, h,
                         bwd, bwdt);
    }

    Tensor next({dirs * h, s_count, n_len});
    Tensor nextt({dirs * h, s_count, n_len});
    detail::transpose2d(fwd.out.data(), p, h, next.ptr());
    detail::transpose2d(fwdt.out.data(), p, h, nextt.ptr());
    if (stack.bidirectional) {
      detail::transpose2d(bwd.out.data(), p, h, next.ptr() + h * p);
      detail::transpose2d(bwdt.out.data(), p, h, nextt.ptr() + h * p);
    }
    cur = std::move(next);
    curt = std::move(nextt);
  }
  return {std::move(cur), std::move(curt)};
}

DualTensor sru_forward(const DualTensor& seq, const SruStack& stack) {
  if (seq.v.rank() != 2) throw shape_error("sru_forward: expected d_in x N sequence");
  DualTensor x{Tensor({seq.v.dim(0), 1, seq.v.dim(1)}), Tensor({seq.v.dim(0), 1, seq.v.dim(1)})};
  x.v.data = seq.v.data;
  x.t.data = seq.t.data;
  DualTensor y = sru_forward_batch(x, stack);
  DualTensor out{Tensor({y.v.dim(0), y.v.dim(2)}), Tensor({y.v.dim(0), y.v.dim(2)})};
  out.v.data = std::move(y.v.data);
  out.t.data = std::move(y.t.data);
  return out;
}

}  // namespace rtfs
