#include <doctest.h>

#include <cmath>
#include <vector>

#include "rtfs/sru.h"

using namespace rtfs;

namespace {

struct OwnedLayer {
  Tensor w, vf, vr, bf, br, hw;
  bool has_hw = false;
};

struct OwnedStack {
  std::vector<OwnedLayer> fwd, bwd;
  std::int64_t din, h;
  bool bidir;
  SruStack view;

  OwnedStack(std::int64_t d0, std::int64_t hidden, std::int64_t layers, bool bidirectional,
             std::uint64_t seed)
      : din(d0), h(hidden), bidir(bidirectional) {
    Rng rng(seed);
    auto make_layer = [&](std::int64_t d) {
      OwnedLayer l;
      l.w = Tensor({3 * hidden, d});
      l.vf = Tensor({hidden});
      l.vr = Tensor({hidden});
      l.bf = Tensor({hidden});
      l.br = Tensor({hidden});
      for (auto* t : {&l.w, &l.vf, &l.vr, &l.bf, &l.br}) {
        for (auto& v : t->data) v = rng.uniform_pm(0.5f);
      }
      if (d != hidden) {
        l.has_hw = true;
        l.hw = Tensor({hidden, d});
        for (auto& v : l.hw.data) v = rng.uniform_pm(0.5f);
      }
      return l;
    };
    const std::int64_t width = bidirectional ? 2 * hidden : hidden;
    for (std::int64_t i = 0; i < layers; ++i) {
      const std::int64_t d = i == 0 ? d0 : width;
      fwd.push_back(make_layer(d));
      bwd.push_back(make_layer(d));
    }
    view.input_dim = d0;
    view.hidden = hidden;
    view.bidirectional = bidirectional;
    for (std::int64_t i = 0; i < layers; ++i) {
      SruLayer sl;
      auto bind = [](const OwnedLayer& o, bool rev) {
        SruLayerWeights lw;
        lw.w = &o.w;
        lw.vf = &o.vf;
        lw.vr = &o.vr;
        lw.bf = &o.bf;
        lw.br = &o.br;
        lw.hw = o.has_hw ? &o.hw : nullptr;
        lw.reverse = rev;
        return lw;
      };
      sl.fwd = bind(fwd[static_cast<std::size_t>(i)], false);
      sl.bwd = bind(bwd[static_cast<std::size_t>(i)], true);
      view.layers.push_back(sl);
    }
  }

  void zero_all() {
    for (auto* side : {&fwd, &bwd}) {
      for (OwnedLayer& l : *side) {
        for (auto* t : {&l.w, &l.vf, &l.vr, &l.bf, &l.br, &l.hw}) {
          for (auto& v : t->data) v = 0.0f;
        }
      }
    }
  }
};

float sigm(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// Naive per-timestep scalar reference for one direction of one layer.
std::vector<std::vector<float>> sru_ref_direction(const OwnedLayer& l, bool reverse,
                                                  const std::vector<std::vector<float>>& seq,
                                                  std::int64_t h) {
  const std::int64_t n = static_cast<std::int64_t>(seq.size());
  const std::int64_t d = static_cast<std::int64_t>(seq[0].size());
  std::vector<std::vector<float>> out(static_cast<std::size_t>(n),
                                      std::vector<float>(static_cast<std::size_t>(h)));
  std::vector<float> c(static_cast<std::size_t>(h), 0.0f);
  for (std::int64_t step = 0; step < n; ++step) {
    const std::int64_t t = reverse ? n - 1 - step : step;
    const auto& x = seq[static_cast<std::size_t>(t)];
    for (std::int64_t j = 0; j < h; ++j) {
      auto dot_row = [&](std::int64_t row) {
        float acc = 0.0f;
        for (std::int64_t i = 0; i < d; ++i) {
          acc += l.w.at(row, i) * x[static_cast<std::size_t>(i)];
        }
        return acc;
      };
      const float xt = dot_row(j);
      const float fh = dot_row(h + j);
      const float rh = dot_row(2 * h + j);
      const float f = sigm(fh + l.vf.data[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(j)] +
                           l.bf.data[static_cast<std::size_t>(j)]);
      const float cn = f * c[static_cast<std::size_t>(j)] + (1.0f - f) * xt;
      const float r = sigm(rh + l.vr.data[static_cast<std::size_t>(j)] * cn +
                           l.br.data[static_cast<std::size_t>(j)]);
      float xhw;
      if (l.has_hw) {
        xhw = 0.0f;
        for (std::int64_t i = 0; i < d; ++i) {
          xhw += l.hw.at(j, i) * x[static_cast<std::size_t>(i)];
        }
      } else {
        xhw = x[static_cast<std::size_t>(j)];
      }
      out[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] = r * cn + (1.0f - r) * xhw;
      c[static_cast<std::size_t>(j)] = cn;
    }
  }
  return out;
}

Tensor sru_ref_stack(const OwnedStack& st, const Tensor& seq) {
  const std::int64_t n = seq.dim(1);
  std::vector<std::vector<float>> cur(static_cast<std::size_t>(n));
  for (std::int64_t t = 0; t < n; ++t) {
    cur[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(seq.dim(0)));
    for (std::int64_t c = 0; c < seq.dim(0); ++c) {
      cur[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] = seq.at(c, t);
    }
  }
  for (std::size_t li = 0; li < st.fwd.size(); ++li) {
    auto f = sru_ref_direction(st.fwd[li], false, cur, st.h);
    if (st.bidir) {
      auto b = sru_ref_direction(st.bwd[li], true, cur, st.h);
      for (std::int64_t t = 0; t < n; ++t) {
        auto& row = f[static_cast<std::size_t>(t)];
        row.insert(row.end(), b[static_cast<std::size_t>(t)].begin(),
                   b[static_cast<std::size_t>(t)].end());
      }
    }
    cur = std::move(f);
  }
  const std::int64_t width = static_cast<std::int64_t>(cur[0].size());
  Tensor out({width, n});
  for (std::int64_t t = 0; t < n; ++t)
    for (std::int64_t c = 0; c < width; ++c) out.at(c, t) = cur[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
  return out;
}

Tensor rand_seq(std::int64_t d, std::int64_t n, std::uint64_t seed, float amp = 1.0f) {
  Tensor t({d, n});
  Rng rng(seed);
  for (auto& v : t.data) v = rng.uniform_pm(amp);
  return t;
}

}  // namespace

TEST_CASE("sru: zero weights with identity highway halve the input") {
  OwnedStack st(6, 6, 1, /*bidirectional=*/false, 1);
  st.zero_all();
  Tensor x = rand_seq(6, 5, 2);
  Tensor y = sru_forward(x, st.view);
  REQUIRE(y.dims == std::vector<std::int64_t>{6, 5});
  for (std::int64_t c = 0; c < 6; ++c)
    for (std::int64_t t = 0; t < 5; ++t) CHECK(y.at(c, t) == doctest::Approx(0.5f * x.at(c, t)));
}

TEST_CASE("sru: single-step recurrence base case c1 = (1-f1).x~") {
  OwnedStack st(4, 4, 1, false, 3);
  Tensor x = rand_seq(4, 1, 4);
  Tensor y = sru_forward(x, st.view);
  const OwnedLayer& l = st.fwd[0];
  for (std::int64_t j = 0; j < 4; ++j) {
    float xt = 0.0f, fh = 0.0f, rh = 0.0f;
    for (std::int64_t i = 0; i < 4; ++i) {
      xt += l.w.at(j, i) * x.at(i, 0);
      fh += l.w.at(4 + j, i) * x.at(i, 0);
      rh += l.w.at(8 + j, i) * x.at(i, 0);
    }
    const float f = sigm(fh + l.bf.data[static_cast<std::size_t>(j)]);
    const float c1 = (1.0f - f) * xt;
    const float r = sigm(rh + l.vr.data[static_cast<std::size_t>(j)] * c1 +
                         l.br.data[static_cast<std::size_t>(j)]);
    const float expect = r * c1 + (1.0f - r) * x.at(j, 0);
    CHECK(y.at(j, 0) == doctest::Approx(expect).epsilon(1e-5));
  }
}

TEST_CASE("sru: reversed input through forward weights equals reversed reverse-direction output") {
  // one layer, one direction vs the same weights flagged reverse
  OwnedStack st(5, 5, 1, false, 5);
  Tensor x = rand_seq(5, 9, 6);
  Tensor xr({5, 9});
  for (std::int64_t c = 0; c < 5; ++c)
    for (std::int64_t t = 0; t < 9; ++t) xr.at(c, t) = x.at(c, 8 - t);

  Tensor y_fwd_on_reversed = sru_forward(xr, st.view);

  st.view.layers[0].fwd.reverse = true;
  Tensor y_rev = sru_forward(x, st.view);
  for (std::int64_t c = 0; c < 5; ++c)
    for (std::int64_t t = 0; t < 9; ++t) {
      CHECK(y_fwd_on_reversed.at(c, t) == doctest::Approx(y_rev.at(c, 8 - t)).epsilon(1e-6));
    }
}

TEST_CASE("sru: bidirectional stacks always emit 2h channels") {
  for (std::int64_t layers : {1, 2, 4}) {
    OwnedStack st(12, 3, layers, true, 7 + static_cast<std::uint64_t>(layers));
    Tensor x = rand_seq(12, 6, 8);
    Tensor y = sru_forward(x, st.view);
    CHECK(y.dims == std::vector<std::int64_t>{6, 6});
  }
}

TEST_CASE("sru: batched implementation matches the scalar per-timestep oracle") {
  OwnedStack st(10, 4, 3, true, 9);
  Tensor x = rand_seq(10, 33, 10);
  Tensor got = sru_forward(x, st.view);
  Tensor ref = sru_ref_stack(st, x);
  REQUIRE(got.dims == ref.dims);
  for (std::int64_t i = 0; i < got.numel(); ++i) {
    CHECK(got.data[i] ==
          doctest::Approx(ref.data[i]).epsilon(1e-6).scale(std::fabs(ref.data[i]) + 1e-3));
  }
}

TEST_CASE("sru: batch layout processes slices independently") {
  OwnedStack st(6, 5, 2, true, 11);
  const std::int64_t s_count = 4, n = 12;
  Tensor batch({6, s_count, n});
  Rng rng(12);
  for (auto& v : batch.data) v = rng.uniform_pm(1.0f);
  Tensor y = sru_forward_batch(batch, st.view);
  REQUIRE(y.dims == std::vector<std::int64_t>{10, s_count, n});
  for (std::int64_t s = 0; s < s_count; ++s) {
    Tensor seq({6, n});
    for (std::int64_t c = 0; c < 6; ++c)
      for (std::int64_t t = 0; t < n; ++t) seq.at(c, t) = batch.at(c, s, t);
    Tensor ys = sru_forward(seq, st.view);
    for (std::int64_t c = 0; c < 10; ++c)
      for (std::int64_t t = 0; t < n; ++t) CHECK(y.at(c, s, t) == ys.at(c, t));
  }
}

TEST_CASE("sru: state stays within the convex-combination bound") {
  OwnedStack st(8, 8, 1, false, 13);
  // candidate bound: |x~| <= ||W row||_1 * B; the output mixes states and
  // highway terms, both bounded, so no element may exceed the input bound
  // scaled by the weight mass
  Tensor x = rand_seq(8, 50, 14, 2.0f);
  Tensor y = sru_forward(x, st.view);
  float wmass = 0.0f;
  for (float v : st.fwd[0].w.data) wmass = std::max(wmass, std::fabs(v));
  const float bound = 8.0f * wmass * 2.0f + 2.0f;
  for (float v : y.data) CHECK(std::fabs(v) <= bound);
}

TEST_CASE("sru: determinism and empty-sequence rejection") {
  OwnedStack st(7, 3, 2, true, 15);
  Tensor x = rand_seq(7, 21, 16);
  Tensor y1 = sru_forward(x, st.view);
  Tensor y2 = sru_forward(x, st.view);
  CHECK(y1.data == y2.data);

  Tensor bad({7, 0});
  CHECK_THROWS_AS(sru_forward(bad, st.view), shape_error);
  Tensor wrong({6, 4});
  CHECK_THROWS_AS(sru_forward(wrong, st.view), shape_error);
}
