#pragma once

// Dense row-major float32 tensors plus the handful of elementwise helpers
// the network blocks are assembled from. Axis labels are advisory metadata
// carried alongside the dims (useful in shape audits and error messages),
// never consulted for arithmetic.

#include <cstdint>
#include <vector>

#include "rtfs/errors.h"

namespace rtfs {

enum class Axis : std::uint8_t { none = 0, channel, time, frequency };

struct Tensor {
  std::vector<std::int64_t> dims;
  std::vector<float> data;
  std::vector<Axis> axes;  // empty or same length as dims

  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> d, float fill = 0.0f);

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(dims.size()); }
  std::int64_t dim(int i) const { return dims[static_cast<std::size_t>(i)]; }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  // 2D [d0 x d1]
  float& at(std::int64_t i, std::int64_t j) { return data[static_cast<std::size_t>(i * dims[1] + j)]; }
  float at(std::int64_t i, std::int64_t j) const { return data[static_cast<std::size_t>(i * dims[1] + j)]; }
  // 3D [d0 x d1 x d2]
  float& at(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data[static_cast<std::size_t>((i * dims[1] + j) * dims[2] + k)];
  }
  float at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data[static_cast<std::size_t>((i * dims[1] + j) * dims[2] + k)];
  }
};

std::int64_t numel_of(const std::vector<std::int64_t>& dims);
std::string dims_to_string(const std::vector<std::int64_t>& dims);

Tensor zeros_like(const Tensor& x);

// Throws numeric_error naming `op` if any element is NaN/Inf.
void check_finite(const char* op, const Tensor& x);

bool same_dims(const Tensor& a, const Tensor& b);
void require_dims(const char* op, const Tensor& x, const std::vector<std::int64_t>& dims);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise (Hadamard)
Tensor scale(const Tensor& a, float s);

// Swap the two trailing axes of a 3D tensor: C x A x B -> C x B x A.
Tensor transpose12(const Tensor& x);

// Zero-pad the trailing spatial axes at their ends.
Tensor pad_end_1d(const Tensor& x, std::int64_t pad);                     // C x T
Tensor pad_end_2d(const Tensor& x, std::int64_t pad_t, std::int64_t pad_f);  // C x T x F

// Channel-axis (axis 0) utilities.
Tensor slice_channels(const Tensor& x, std::int64_t c0, std::int64_t c1);
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Deterministic RNG used for weight init and test fixtures (splitmix64).
// The integer-to-float mapping is pinned here so seeded stores are
// bit-identical across platforms and standard libraries.
struct Rng {
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  // uniform in [0, 1)
  float uniform();
  // uniform in [-a, a]
  float uniform_pm(float a) { return a * (2.0f * uniform() - 1.0f); }
  // standard normal via Box-Muller on pinned uniforms
  float normal();

 private:
  std::uint64_t next_u64();
  std::uint64_t state_;
  bool have_spare_ = false;
  float spare_ = 0.0f;
};

}  // namespace rtfs
