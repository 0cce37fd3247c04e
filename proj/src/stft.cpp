#include "rtfs/stft.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rtfs/conv.h"

namespace rtfs {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 complex FFT, double precision internals. window sizes
// are small fixed powers of two, so a planless butterfly pass is plenty.
void fft_inplace(std::vector<double>& re, std::vector<double>& im, bool inverse) {
  const std::size_t n = re.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
  if (inverse) {
    const double s = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      re[i] *= s;
      im[i] *= s;
    }
  }
}

std::vector<double> hann_periodic(std::int64_t n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

// Reflect-pad lookup: sample index i in [-pad, len+pad) of the virtual
// padded signal (no edge repetition; degenerate length-1 signals map to 0).
std::int64_t reflect_index(std::int64_t i, std::int64_t len) {
  if (len == 1) return 0;
  const std::int64_t period = 2 * (len - 1);
  std::int64_t j = i % period;
  if (j < 0) j += period;
  return j < len ? j : period - j;
}

}  // namespace

ComplexSpectrogram stft(const Waveform& x, std::int64_t window, std::int64_t hop) {
  if (x.length() < 1) throw shape_error("stft: empty input");
  if (!is_pow2(window)) throw shape_error("stft: window size must be a power of two");
  if (hop < 1 || hop > window) throw shape_error("stft: bad hop length");
  for (float v : x.samples) {
    if (!std::isfinite(v)) throw numeric_error("stft: non-finite input sample");
  }

  const std::int64_t len = x.length();
  const std::int64_t half = window / 2;
  const std::int64_t frames = len / hop + 1;
  const std::int64_t bins = window / 2 + 1;
  const auto win = hann_periodic(window);

  ComplexSpectrogram out;
  out.window_size = window;
  out.hop = hop;
  out.real = Tensor({frames, bins});
  out.imag = Tensor({frames, bins});
  out.real.axes = {Axis::time, Axis::frequency};
  out.imag.axes = {Axis::time, Axis::frequency};

  std::vector<double> re(static_cast<std::size_t>(window));
  std::vector<double> im(static_cast<std::size_t>(window));
  for (std::int64_t fr = 0; fr < frames; ++fr) {
    for (std::int64_t n = 0; n < window; ++n) {
      // centered framing: frame fr starts at fr*hop - half in signal coords
      const std::int64_t si = reflect_index(fr * hop - half + n, len);
      re[static_cast<std::size_t>(n)] =
          static_cast<double>(x.samples[static_cast<std::size_t>(si)]) *
          win[static_cast<std::size_t>(n)];
      im[static_cast<std::size_t>(n)] = 0.0;
    }
    fft_inplace(re, im, false);
    for (std::int64_t k = 0; k < bins; ++k) {
      out.real.at(fr, k) = static_cast<float>(re[static_cast<std::size_t>(k)]);
      out.imag.at(fr, k) = static_cast<float>(im[static_cast<std::size_t>(k)]);
    }
  }
  check_finite("stft:real", out.real);
  check_finite("stft:imag", out.imag);
  return out;
}

Waveform istft(const ComplexSpectrogram& spec, std::int64_t out_len) {
  const std::int64_t window = spec.window_size;
  const std::int64_t hop = spec.hop;
  if (!is_pow2(window)) throw shape_error("istft: window size must be a power of two");
  const std::int64_t bins = window / 2 + 1;
  if (spec.real.rank() != 2 || !same_dims(spec.real, spec.imag) || spec.bins() != bins) {
    throw shape_error("istft: inconsistent spectrogram shape " + dims_to_string(spec.real.dims));
  }
  const std::int64_t frames = spec.frames();
  const std::int64_t covered = frames * hop;  // real samples after centre trim
  if (out_len < 0 || out_len > covered) {
    throw shape_error("istft: requested " + std::to_string(out_len) +
                      " samples but frame coverage ends at " + std::to_string(covered));
  }

  const std::int64_t half = window / 2;
  const std::int64_t padded_len = (frames - 1) * hop + window;
  const auto win = hann_periodic(window);
  std::vector<double> acc(static_cast<std::size_t>(padded_len), 0.0);
  std::vector<double> wsum(static_cast<std::size_t>(padded_len), 0.0);

  std::vector<double> re(static_cast<std::size_t>(window));
  std::vector<double> im(static_cast<std::size_t>(window));
  for (std::int64_t fr = 0; fr < frames; ++fr) {
    for (std::int64_t k = 0; k < bins; ++k) {
      re[static_cast<std::size_t>(k)] = spec.real.at(fr, k);
      im[static_cast<std::size_t>(k)] = spec.imag.at(fr, k);
    }
    // hermitian completion of the one-sided spectrum
    for (std::int64_t k = bins; k < window; ++k) {
      re[static_cast<std::size_t>(k)] = re[static_cast<std::size_t>(window - k)];
      im[static_cast<std::size_t>(k)] = -im[static_cast<std::size_t>(window - k)];
    }
    fft_inplace(re, im, true);
    const std::int64_t base = fr * hop;
    for (std::int64_t n = 0; n < window; ++n) {
      const double wv = win[static_cast<std::size_t>(n)];
      acc[static_cast<std::size_t>(base + n)] += wv * re[static_cast<std::size_t>(n)];
      wsum[static_cast<std::size_t>(base + n)] += wv * wv;
    }
  }

  Waveform out;
  out.sample_rate = kSampleRate;
  out.samples.resize(static_cast<std::size_t>(out_len), 0.0f);
  for (std::int64_t i = 0; i < out_len; ++i) {
    const std::size_t p = static_cast<std::size_t>(i + half);
    if (wsum[p] > 1e-10) {
      out.samples[static_cast<std::size_t>(i)] = static_cast<float>(acc[p] / wsum[p]);
    }
  }
  return out;
}

Tensor spec_to_tensor(const ComplexSpectrogram& spec) {
  const std::int64_t t = spec.frames(), f = spec.bins();
  Tensor out({2, t, f});
  out.axes = {Axis::channel, Axis::time, Axis::frequency};
  std::copy(spec.real.data.begin(), spec.real.data.end(), out.data.begin());
  std::copy(spec.imag.data.begin(), spec.imag.data.end(), out.data.begin() + t * f);
  return out;
}

Tensor encode_audio(const ComplexSpectrogram& spec, const Tensor& w, const Tensor* b) {
  const Tensor x = spec_to_tensor(spec);
  const std::int64_t ca = w.dim(0);
  ConvSpec cs = ConvSpec::conv2d(2, ca, 3, 3, 1, 1);
  cs.has_bias = b != nullptr;
  Tensor out = conv2d(x, cs, w, b);
  out.axes = {Axis::channel, Axis::time, Axis::frequency};
  return out;
}

Waveform decode_audio(const Tensor& z, const Tensor& w, const Tensor* b, std::int64_t window,
                      std::int64_t hop, std::int64_t out_len) {
  if (z.rank() != 3) throw shape_error("decode_audio: expected C x T x F features");
  const std::int64_t frames = z.dim(1);
  if (out_len > frames * hop) {
    throw shape_error("decode_audio: out_len " + std::to_string(out_len) +
                      " inconsistent with " + std::to_string(frames) + " frames");
  }
  ConvSpec cs = ConvSpec::conv2d(z.dim(0), 2, 3, 3, 1, 1);
  cs.transposed = true;
  cs.has_bias = b != nullptr;
  const Tensor planes = conv2d(z, cs, w, b);

  ComplexSpectrogram spec;
  spec.window_size = window;
  spec.hop = hop;
  spec.real = slice_channels(planes, 0, 1);
  spec.real.dims = {planes.dim(1), planes.dim(2)};
  spec.real.axes = {Axis::time, Axis::frequency};
  spec.imag = slice_channels(planes, 1, 2);
  spec.imag.dims = {planes.dim(1), planes.dim(2)};
  spec.imag.axes = {Axis::time, Axis::frequency};
  return istft(spec, out_len);
}

}  // namespace rtfs
