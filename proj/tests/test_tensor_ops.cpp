#include <doctest.h>

#include <cmath>
#include <vector>

#include "rtfs/conv.h"
#include "rtfs/norms.h"
#include "rtfs/ops.h"
#include "rtfs/tensor.h"

using namespace rtfs;

namespace {

// Independent reference: direct window-overlap accumulation with bounds
// checks, no padding buffer, no fast paths.
Tensor conv2d_ref(const Tensor& x, const ConvSpec& s, const Tensor& w, const Tensor* b) {
  const std::int64_t cing = s.in_channels / s.groups, coutg = s.out_channels / s.groups;
  const std::int64_t t = x.dim(1), f = x.dim(2);
  const std::int64_t to_n = (t + 2 * s.padding - s.kh) / s.stride + 1;
  const std::int64_t fo_n = (f + 2 * s.padding - s.kw) / s.stride + 1;
  Tensor out({s.out_channels, to_n, fo_n});
  for (std::int64_t co = 0; co < s.out_channels; ++co) {
    const std::int64_t gi = co / coutg;
    for (std::int64_t to = 0; to < to_n; ++to) {
      for (std::int64_t fo = 0; fo < fo_n; ++fo) {
        double acc = b != nullptr ? b->data[static_cast<std::size_t>(co)] : 0.0;
        for (std::int64_t cig = 0; cig < cing; ++cig) {
          const std::int64_t ci = gi * cing + cig;
          for (std::int64_t ki = 0; ki < s.kh; ++ki) {
            for (std::int64_t kj = 0; kj < s.kw; ++kj) {
              const std::int64_t ti = to * s.stride - s.padding + ki;
              const std::int64_t fi = fo * s.stride - s.padding + kj;
              if (ti < 0 || ti >= t || fi < 0 || fi >= f) continue;
              acc += static_cast<double>(x.at(ci, ti, fi)) *
                     w.data[static_cast<std::size_t>(((co * cing + cig) * s.kh + ki) * s.kw + kj)];
            }
          }
        }
        out.at(co, to, fo) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Tensor filled(std::vector<std::int64_t> dims, float v) { return Tensor(std::move(dims), v); }

Tensor randomized(std::vector<std::int64_t> dims, std::uint64_t seed) {
  Tensor t(std::move(dims));
  Rng rng(seed);
  for (auto& v : t.data) v = rng.normal();
  return t;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.dims == b.dims);
  float m = 0.0f;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  }
  return m;
}

}  // namespace

TEST_CASE("conv2d: 1x1 kernel is a scalar multiply") {
  Tensor x = filled({1, 1, 1}, 3.0f);
  Tensor w = filled({1, 1, 1, 1}, 2.0f);
  ConvSpec s = ConvSpec::conv2d(1, 1, 1, 1);
  s.has_bias = false;
  Tensor y = conv2d(x, s, w, nullptr);
  CHECK(y.data[0] == doctest::Approx(6.0f));
}

TEST_CASE("conv2d: depth-wise 4x4 ones kernel, stride 2, pad 1 counts window overlaps") {
  // overlap hand-count via the reference implementation
  ConvSpec s = ConvSpec::conv2d(1, 1, 4, 4, 2, 1, 1);
  s.has_bias = false;
  Tensor w = filled({1, 1, 4, 4}, 1.0f);

  // 4x4 ones: every window sees a 3x3 block of ones
  Tensor x4 = filled({1, 4, 4}, 1.0f);
  Tensor y4 = conv2d(x4, s, w, nullptr);
  CHECK(y4.dims == std::vector<std::int64_t>{1, 2, 2});
  Tensor ref4 = conv2d_ref(x4, s, w, nullptr);
  CHECK(max_abs_diff(y4, ref4) == 0.0f);
  for (float v : y4.data) CHECK(v == doctest::Approx(9.0f));

  // 5x5 ones probes the asymmetric edge counts 9/12/12/16
  Tensor x5 = filled({1, 5, 5}, 1.0f);
  Tensor y5 = conv2d(x5, s, w, nullptr);
  CHECK(y5.dims == std::vector<std::int64_t>{1, 2, 2});
  CHECK(y5.at(0, 0, 0) == doctest::Approx(9.0f));
  CHECK(y5.at(0, 0, 1) == doctest::Approx(12.0f));
  CHECK(y5.at(0, 1, 0) == doctest::Approx(12.0f));
  CHECK(y5.at(0, 1, 1) == doctest::Approx(16.0f));
  CHECK(max_abs_diff(y5, conv2d_ref(x5, s, w, nullptr)) == 0.0f);
}

TEST_CASE("conv2d: identity kernel (k=3, centre 1, pad 1) preserves the input") {
  Tensor x = randomized({3, 6, 7}, 11);
  Tensor w({3, 1, 3, 3});
  for (std::int64_t c = 0; c < 3; ++c) w.data[static_cast<std::size_t>(c * 9 + 4)] = 1.0f;
  ConvSpec s = ConvSpec::conv2d(3, 3, 3, 3, 1, 1, 3);
  s.has_bias = false;
  Tensor y = conv2d(x, s, w, nullptr);
  CHECK(max_abs_diff(y, x) == 0.0f);
}

TEST_CASE("conv2d matches the brute-force reference on random grouped problems") {
  struct Case {
    std::int64_t cin, cout, kh, kw, stride, pad, groups;
  };
  const Case cases[] = {
      {2, 8, 3, 3, 1, 1, 1}, {8, 8, 4, 4, 2, 1, 8}, {4, 6, 1, 1, 1, 0, 2},
      {6, 6, 1, 1, 1, 0, 1}, {4, 2, 3, 2, 2, 2, 2},
  };
  std::uint64_t seed = 100;
  for (const Case& c : cases) {
    ConvSpec s = ConvSpec::conv2d(c.cin, c.cout, c.kh, c.kw, c.stride, c.pad, c.groups);
    Tensor x = randomized({c.cin, 9, 11}, seed++);
    Tensor w = randomized({c.cout, c.cin / c.groups, c.kh, c.kw}, seed++);
    Tensor b = randomized({c.cout}, seed++);
    Tensor y = conv2d(x, s, w, &b);
    Tensor ref = conv2d_ref(x, s, w, &b);
    CHECK(max_abs_diff(y, ref) < 1e-5f);
  }
}

TEST_CASE("conv2d transposed inverts the forward shape map and matches scatter semantics") {
  ConvSpec s = ConvSpec::conv2d(2, 3, 3, 3, 1, 1);
  s.transposed = true;
  s.has_bias = false;
  Tensor x = randomized({2, 5, 6}, 7);
  Tensor w = randomized({2, 3, 3, 3}, 8);
  Tensor y = conv2d(x, s, w, nullptr);
  CHECK(y.dims == std::vector<std::int64_t>{3, 5, 6});

  // scatter-form reference: every input element distributes through the kernel
  Tensor ref({3, 5, 6});
  for (std::int64_t ci = 0; ci < 2; ++ci)
    for (std::int64_t co = 0; co < 3; ++co)
      for (std::int64_t ti = 0; ti < 5; ++ti)
        for (std::int64_t fi = 0; fi < 6; ++fi)
          for (std::int64_t ki = 0; ki < 3; ++ki)
            for (std::int64_t kj = 0; kj < 3; ++kj) {
              const std::int64_t to = ti - 1 + ki, fo = fi - 1 + kj;
              if (to < 0 || to >= 5 || fo < 0 || fo >= 6) continue;
              ref.at(co, to, fo) +=
                  x.at(ci, ti, fi) * w.data[static_cast<std::size_t>(((ci * 3 + co) * 3 + ki) * 3 + kj)];
            }
  CHECK(max_abs_diff(y, ref) < 1e-5f);
}

TEST_CASE("conv2d rejects bad shapes and zero-size outputs") {
  ConvSpec s = ConvSpec::conv2d(2, 4, 3, 3);
  Tensor w({4, 2, 3, 3});
  Tensor b({4});
  Tensor x({3, 5, 5});
  CHECK_THROWS_AS(conv2d(x, s, w, &b), shape_error);
  Tensor tiny({2, 2, 2});
  CHECK_THROWS_AS(conv2d(tiny, s, w, &b), shape_error);
  Tensor wbad({4, 2, 3, 2});
  Tensor ok({2, 5, 5});
  CHECK_THROWS_AS(conv2d(ok, s, wbad, &b), shape_error);
}

TEST_CASE("conv1d: kernel-1 depth-wise identity, group wiring, bias-only map") {
  // per-channel unit weight is the identity
  Tensor x = randomized({4, 9}, 21);
  Tensor w1 = filled({4, 1, 1}, 1.0f);
  ConvSpec s1 = ConvSpec::conv1d(4, 4, 1, 1, 0, 4);
  s1.has_bias = false;
  CHECK(max_abs_diff(conv1d(x, s1, w1, nullptr), x) == 0.0f);

  // groups=2 wiring: output channel o sees exactly inputs {2o, 2o+1}
  ConvSpec s2 = ConvSpec::conv1d(4, 2, 1, 1, 0, 2);
  s2.has_bias = false;
  Tensor w2 = filled({2, 2, 1}, 1.0f);
  for (std::int64_t ci = 0; ci < 4; ++ci) {
    Tensor impulse({4, 3});
    impulse.at(ci, 1) = 1.0f;
    Tensor y = conv1d(impulse, s2, w2, nullptr);
    for (std::int64_t co = 0; co < 2; ++co) {
      const float expect = (ci / 2 == co) ? 1.0f : 0.0f;
      CHECK(y.at(co, 1) == doctest::Approx(expect));
    }
  }

  // zero weights + bias gives a constant map
  Tensor w3({3, 4, 1});
  Tensor b3 = filled({3}, 0.75f);
  ConvSpec s3 = ConvSpec::conv1d(4, 3, 1);
  Tensor y3 = conv1d(x, s3, w3, &b3);
  for (float v : y3.data) CHECK(v == doctest::Approx(0.75f));
}

TEST_CASE("gln: zero-variance guard, standardization, closed form") {
  Tensor g = filled({2}, 1.0f);
  Tensor b = filled({2}, 0.0f);

  Tensor constant = filled({2, 3, 4}, 5.0f);
  Tensor y = gln(constant, g, b);
  for (float v : y.data) CHECK(v == doctest::Approx(0.0f));

  Tensor x = randomized({2, 5, 6}, 33);
  Tensor z = gln(x, g, b);
  double mean = 0.0, var = 0.0;
  for (float v : z.data) mean += v;
  mean /= static_cast<double>(z.numel());
  for (float v : z.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(z.numel());
  CHECK(std::fabs(mean) < 1e-5);
  CHECK(std::fabs(var - 1.0) < 1e-4);

  Tensor two({1, 2, 1});
  two.data = {0.0f, 2.0f};
  Tensor g1 = filled({1}, 1.0f), b1 = filled({1}, 0.0f);
  Tensor t = gln(two, g1, b1);
  CHECK(t.data[0] == doctest::Approx(-1.0f).epsilon(1e-4));
  CHECK(t.data[1] == doctest::Approx(1.0f).epsilon(1e-4));
}

TEST_CASE("channel_ln: degenerate single channel, closed form, shift invariance") {
  Tensor g1 = filled({1}, 1.0f);
  Tensor b1 = filled({1}, 0.7f);
  Tensor x1 = randomized({1, 4, 5}, 44);
  Tensor y1 = channel_ln(x1, g1, b1);
  for (float v : y1.data) CHECK(v == doctest::Approx(0.7f));

  Tensor col({2, 1, 1});
  col.data = {3.0f, 5.0f};
  Tensor g2 = filled({2}, 1.0f), b2 = filled({2}, 0.0f);
  Tensor y2 = channel_ln(col, g2, b2);
  CHECK(y2.data[0] == doctest::Approx(-1.0f).epsilon(1e-4));
  CHECK(y2.data[1] == doctest::Approx(1.0f).epsilon(1e-4));

  // adding a constant across channels at one position changes nothing
  Tensor x3 = randomized({6, 3, 3}, 45);
  Tensor x3b = x3;
  for (std::int64_t c = 0; c < 6; ++c) x3b.at(c, 1, 2) += 17.0f;
  Tensor g3 = filled({6}, 1.0f), b3 = filled({6}, 0.0f);
  CHECK(max_abs_diff(channel_ln(x3, g3, b3), channel_ln(x3b, g3, b3)) < 1e-4f);
}

TEST_CASE("interp_nearest: floor index rule") {
  Tensor x({1, 2});
  x.data = {10.0f, 20.0f};
  Tensor y = interp_nearest_1d(x, 4);
  CHECK(y.data == std::vector<float>{10.0f, 10.0f, 20.0f, 20.0f});

  Tensor z = interp_nearest_1d(x, 2);
  CHECK(z.data == x.data);

  Tensor a({1, 3});
  a.data = {1.0f, 2.0f, 3.0f};
  Tensor b = interp_nearest_1d(a, 5);
  CHECK(b.data == std::vector<float>{1.0f, 1.0f, 2.0f, 2.0f, 3.0f});

  CHECK_THROWS_AS(interp_nearest_1d(a, 0), shape_error);
}

TEST_CASE("adaptive_avg_pool: identity, even split, overlapping bins") {
  Tensor x({1, 4});
  x.data = {1.0f, 2.0f, 3.0f, 4.0f};
  CHECK(adaptive_avg_pool_1d(x, 4).data == x.data);
  Tensor y = adaptive_avg_pool_1d(x, 2);
  CHECK(y.data[0] == doctest::Approx(1.5f));
  CHECK(y.data[1] == doctest::Approx(3.5f));

  Tensor five({1, 5});
  five.data = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f};
  Tensor p = adaptive_avg_pool_1d(five, 2);
  // bins {0,1,2} and {2,3,4}
  CHECK(p.data[0] == doctest::Approx(2.0f));
  CHECK(p.data[1] == doctest::Approx(4.0f));
}

TEST_CASE("unfold_freq: identity, window enumeration, tail padding") {
  Tensor x = randomized({1, 2, 4}, 55);
  Tensor id = unfold_freq(x, 1, 1);
  CHECK(id.dims == x.dims);
  CHECK(max_abs_diff(id, x) == 0.0f);

  Tensor y = unfold_freq(x, 2, 1);
  CHECK(y.dims == std::vector<std::int64_t>{2, 2, 3});
  for (std::int64_t t = 0; t < 2; ++t)
    for (std::int64_t w = 0; w < 3; ++w) {
      CHECK(y.at(0, t, w) == x.at(0, t, w));
      CHECK(y.at(1, t, w) == x.at(0, t, w + 1));
    }

  Tensor z({1, 1, 5});
  z.data = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f};
  Tensor u = unfold_freq(z, 2, 2);
  CHECK(u.dims == std::vector<std::int64_t>{2, 1, 3});
  CHECK(u.at(0, 0, 2) == doctest::Approx(5.0f));
  CHECK(u.at(1, 0, 2) == doctest::Approx(0.0f));  // zero tail pad

  Tensor small({1, 1, 3});
  CHECK_THROWS_AS(unfold_freq(small, 5, 1), shape_error);
}

TEST_CASE("unfold then averaging transposed conv reconstructs the interior") {
  const std::int64_t k = 2;
  Tensor x = filled({1, 3, 6}, 2.5f);
  Tensor u = unfold_freq(x, k, 1);
  ConvSpec s = ConvSpec::conv1d(k, 1, k);
  s.transposed = true;
  s.has_bias = false;
  Tensor w = filled({k, 1, k}, 1.0f / static_cast<float>(k * k));
  Tensor y = conv1d_sliced(u, s, w, nullptr);
  CHECK(y.dims == x.dims);
  for (std::int64_t t = 0; t < 3; ++t)
    for (std::int64_t f = 1; f < 5; ++f) CHECK(y.at(0, t, f) == doctest::Approx(2.5f));
}

TEST_CASE("activations: softmax, prelu, relu, sigmoid, tanh") {
  Tensor c = filled({5, 1}, 3.7f);
  Tensor sm = softmax(c, 0);
  for (float v : sm.data) CHECK(v == doctest::Approx(0.2f));

  Tensor x({2, 1});
  x.data = {0.0f, std::log(3.0f)};
  Tensor y = softmax(x, 0);
  CHECK(y.data[0] == doctest::Approx(0.25f));
  CHECK(y.data[1] == doctest::Approx(0.75f));

  Tensor n({1, 1});
  n.data = {-1.0f};
  Tensor slope = filled({1}, 0.25f);
  CHECK(prelu(n, slope).data[0] == doctest::Approx(-0.25f));
  CHECK(relu(n).data[0] == 0.0f);
  CHECK(sigmoid(Tensor({1, 1})).data[0] == doctest::Approx(0.5f));
  CHECK(tanh_act(n).data[0] == doctest::Approx(std::tanh(-1.0f)));
}

TEST_CASE("softmax properties: sums to one, shift invariant") {
  Tensor x = randomized({7, 4, 3}, 66);
  Tensor y = softmax(x, 0);
  for (std::int64_t t = 0; t < 4; ++t)
    for (std::int64_t f = 0; f < 3; ++f) {
      double s = 0.0;
      for (std::int64_t c = 0; c < 7; ++c) s += y.at(c, t, f);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
  Tensor shifted = x;
  for (auto& v : shifted.data) v += 11.5f;
  CHECK(max_abs_diff(softmax(shifted, 0), y) < 1e-6f);
}

TEST_CASE("primitives are deterministic across repeat runs") {
  Tensor x = randomized({8, 16, 24}, 77);
  Tensor w = randomized({16, 8, 3, 3}, 78);
  Tensor b = randomized({16}, 79);
  ConvSpec s = ConvSpec::conv2d(8, 16, 3, 3, 1, 1);
  Tensor y1 = conv2d(x, s, w, &b);
  Tensor y2 = conv2d(x, s, w, &b);
  CHECK(y1.data == y2.data);
}

TEST_CASE("non-finite values are surfaced as numeric errors") {
  Tensor x = filled({1, 2, 2}, 1.0f);
  Tensor big = filled({1, 2, 2}, 3e38f);
  CHECK_THROWS_AS(add(big, big), numeric_error);
  Tensor w = filled({1, 1, 1, 1}, 3e38f);
  ConvSpec s = ConvSpec::conv2d(1, 1, 1, 1);
  s.has_bias = false;
  CHECK_THROWS_AS(conv2d(big, s, w, nullptr), numeric_error);
  CHECK_NOTHROW(conv2d(x, s, w, nullptr));
}

TEST_CASE("conv2d with groups=C, 1x1 identity kernel is the identity") {
  Tensor x = randomized({5, 7, 9}, 88);
  Tensor w = filled({5, 1, 1, 1}, 1.0f);
  ConvSpec s = ConvSpec::conv2d(5, 5, 1, 1, 1, 0, 5);
  s.has_bias = false;
  CHECK(max_abs_diff(conv2d(x, s, w, nullptr), x) == 0.0f);
}
