#pragma once

// Internal compute kernels: a parallel_for with a fixed, thread-count
// independent work split, a blocked transpose, and the NT matmul every
// matrix product in the engine lowers to. The reduction order of every
// kernel is fixed, so results are bit-identical across runs and thread
// counts.

#include <cstdint>
#include <functional>

namespace rtfs::detail {

int worker_count();

// Runs fn(begin, end) over a static partition of [0, n). Falls back to a
// single inline call when n < grain.
void parallel_for(std::int64_t n, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

// dst[c * rows + r] = src[r * cols + c]
void transpose2d(const float* src, std::int64_t rows, std::int64_t cols, float* dst);

// C[m x n] = A[m x k] * B[n x k]^T, row-major. Eight-lane partial sums in a
// fixed order; the same order is used by the scalar tail.
void matmul_nt(const float* a, const float* b, float* c, std::int64_t m,
               std::int64_t n, std::int64_t k);

inline float dot(const float* a, const float* b, std::int64_t n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  for (; i < n; ++i) acc[i & 7] += a[i] * b[i];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

// y[i] += s * x[i]
inline void axpy(std::int64_t n, float s, const float* x, float* y) {
  for (std::int64_t i = 0; i < n; ++i) y[i] += s * x[i];
}

}  // namespace rtfs::detail
