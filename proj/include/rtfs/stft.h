#pragma once

// Waveform <-> TF-domain boundary: STFT/iSTFT with a periodic Hann window
// and centered (reflect-padded) frames, plus the convolutional audio
// encoder/decoder that wrap them.

#include <cstdint>
#include <vector>

#include "rtfs/tensor.h"

namespace rtfs {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  std::int64_t length() const { return static_cast<std::int64_t>(samples.size()); }
};

struct ComplexSpectrogram {
  Tensor real;  // T_a x F
  Tensor imag;  // T_a x F
  std::int64_t window_size = 256;
  std::int64_t hop = 128;

  std::int64_t frames() const { return real.dim(0); }
  std::int64_t bins() const { return real.dim(1); }
};

// T_a = floor(L / hop) + 1, F = window/2 + 1 (one-sided; window power of two).
ComplexSpectrogram stft(const Waveform& x, std::int64_t window = 256, std::int64_t hop = 128);

// Hann overlap-add with window-sum normalization; istft(stft(x), L) == x up
// to float roundoff. out_len may not exceed frames() * hop.
Waveform istft(const ComplexSpectrogram& spec, std::int64_t out_len);

// Real/imag planes stacked on a channel axis, then a shape-preserving
// 3x3 conv (pad 1) to C_a channels: output C_a x T_a x F.
Tensor encode_audio(const ComplexSpectrogram& spec, const Tensor& w, const Tensor* b);

// Transposed 3x3 conv (pad 1) down to 2 channels (ch 0 real, ch 1 imag),
// then iSTFT trimmed to out_len samples.
Waveform decode_audio(const Tensor& z, const Tensor& w, const Tensor* b, std::int64_t window,
                      std::int64_t hop, std::int64_t out_len);

// Stacks Re/Im into the 2 x T_a x F encoder input.
Tensor spec_to_tensor(const ComplexSpectrogram& spec);

}  // namespace rtfs
