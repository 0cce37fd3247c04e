#include "kernels.h"

#include <algorithm>
#include <thread>
#include <vector>

namespace rtfs::detail {

int worker_count() {
  static const int n = [] {
    unsigned hc = std::thread::hardware_concurrency();
    if (hc == 0) hc = 1;
    return static_cast<int>(std::min(hc, 8u));
  }();
  return n;
}

void parallel_for(std::int64_t n, std::int64_t grain,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = worker_count();
  if (workers == 1 || n < 2 * grain) {
    fn(0, n);
    return;
  }
  const std::int64_t chunks = std::min<std::int64_t>(workers, (n + grain - 1) / grain);
  const std::int64_t step = (n + chunks - 1) / chunks;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(chunks - 1));
  for (std::int64_t c = 1; c < chunks; ++c) {
    const std::int64_t b = c * step;
    const std::int64_t e = std::min(n, b + step);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(0, std::min(n, step));
  for (auto& t : pool) t.join();
}

void transpose2d(const float* src, std::int64_t rows, std::int64_t cols, float* dst) {
  constexpr std::int64_t kBlock = 32;
  for (std::int64_t r0 = 0; r0 < rows; r0 += kBlock) {
    const std::int64_t r1 = std::min(rows, r0 + kBlock);
    for (std::int64_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::int64_t c1 = std::min(cols, c0 + kBlock);
      for (std::int64_t r = r0; r < r1; ++r)
        for (std::int64_t c = c0; c < c1; ++c) dst[c * rows + r] = src[r * cols + c];
    }
  }
}

void matmul_nt(const float* a, const float* b, float* c, std::int64_t m,
               std::int64_t n, std::int64_t k) {
  parallel_for(m, 16, [=](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      const float* ai = a + i * k;
      float* ci = c + i * n;
      std::int64_t j = 0;
      for (; j + 2 <= n; j += 2) {
        const float* b0 = b + j * k;
        const float* b1 = b0 + k;
        float acc0[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        float acc1[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        std::int64_t p = 0;
        for (; p + 8 <= k; p += 8) {
          for (int l = 0; l < 8; ++l) {
            const float av = ai[p + l];
            acc0[l] += av * b0[p + l];
            acc1[l] += av * b1[p + l];
          }
        }
        for (; p < k; ++p) {
          acc0[p & 7] += ai[p] * b0[p];
          acc1[p & 7] += ai[p] * b1[p];
        }
        ci[j] = ((acc0[0] + acc0[4]) + (acc0[1] + acc0[5])) +
                ((acc0[2] + acc0[6]) + (acc0[3] + acc0[7]));
        ci[j + 1] = ((acc1[0] + acc1[4]) + (acc1[1] + acc1[5])) +
                    ((acc1[2] + acc1[6]) + (acc1[3] + acc1[7]));
      }
      for (; j < n; ++j) ci[j] = dot(ai, b + j * k, k);
    }
  });
}

}  // namespace rtfs::detail
