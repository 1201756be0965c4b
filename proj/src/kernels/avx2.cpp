// Compiled with -mavx2; only reached through the dispatch table after a
// CPUID check, so nothing here may run on a CPU without AVX2.

#include <immintrin.h>

#include "flipconc/kernels.hpp"

namespace flipconc::kernels {
namespace {

constexpr std::size_t kLanes = 4;

// Applies the in-register part (bits 0..1) of a flip mask to a 4-lane block.
inline __m256d permute_low(__m256d v, std::uint64_t low) {
  if (low & 1u) v = _mm256_permute_pd(v, 0b0101);
  if (low & 2u) v = _mm256_permute2f128_pd(v, v, 0x01);
  return v;
}

void flip_gather_fn(std::span<double> y, std::span<const double> a,
                    std::span<const double> x, std::uint64_t mask) {
  const std::size_t n = y.size();
  if (n < kLanes) {
    scalar().flip_gather_fn(y, a, x, mask);
    return;
  }
  const std::uint64_t high = mask & ~std::uint64_t{3};
  const std::uint64_t low = mask & 3u;
  for (std::size_t b = 0; b < n; b += kLanes) {
    const __m256d xs = permute_low(_mm256_loadu_pd(x.data() + (b ^ high)), low);
    const __m256d as = _mm256_loadu_pd(a.data() + b);
    const __m256d ys = _mm256_loadu_pd(y.data() + b);
    _mm256_storeu_pd(y.data() + b, _mm256_add_pd(ys, _mm256_mul_pd(as, xs)));
  }
}

void flip_gather_measure(std::span<double> y, std::span<const double> a,
                         std::span<const double> x, std::uint64_t mask) {
  const std::size_t n = y.size();
  if (n < kLanes) {
    scalar().flip_gather_measure(y, a, x, mask);
    return;
  }
  const std::uint64_t high = mask & ~std::uint64_t{3};
  const std::uint64_t low = mask & 3u;
  for (std::size_t b = 0; b < n; b += kLanes) {
    const std::size_t src = b ^ high;
    const __m256d prod =
        _mm256_mul_pd(_mm256_loadu_pd(a.data() + src), _mm256_loadu_pd(x.data() + src));
    const __m256d ys = _mm256_loadu_pd(y.data() + b);
    _mm256_storeu_pd(y.data() + b, _mm256_add_pd(ys, permute_low(prod, low)));
  }
}

void hadamard(std::span<double> y, std::span<const double> a,
              std::span<const double> x) {
  const std::size_t n = y.size();
  std::size_t s = 0;
  for (; s + kLanes <= n; s += kLanes) {
    _mm256_storeu_pd(y.data() + s,
                     _mm256_mul_pd(_mm256_loadu_pd(a.data() + s), _mm256_loadu_pd(x.data() + s)));
  }
  for (; s < n; ++s) y[s] = a[s] * x[s];
}

void axpy(std::span<double> y, double alpha, std::span<const double> x) {
  const std::size_t n = y.size();
  const __m256d al = _mm256_set1_pd(alpha);
  std::size_t s = 0;
  for (; s + kLanes <= n; s += kLanes) {
    const __m256d ys = _mm256_loadu_pd(y.data() + s);
    _mm256_storeu_pd(y.data() + s,
                     _mm256_add_pd(ys, _mm256_mul_pd(al, _mm256_loadu_pd(x.data() + s))));
  }
  for (; s < n; ++s) y[s] += alpha * x[s];
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t s = 0;
  for (; s + kLanes <= n; s += kLanes) {
    acc = _mm256_add_pd(acc,
                        _mm256_mul_pd(_mm256_loadu_pd(a.data() + s), _mm256_loadu_pd(b.data() + s)));
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; s < n; ++s) total += a[s] * b[s];
  return total;
}

void walsh_hadamard_i64(std::span<std::int64_t> v) {
  const std::size_t n = v.size();
  std::size_t h = 1;
  // Butterflies with stride < 4 stay inside one register; do them scalar.
  for (; h < n && h < kLanes; h <<= 1) {
    for (std::size_t base = 0; base < n; base += 2 * h) {
      for (std::size_t j = base; j < base + h; ++j) {
        const std::int64_t u = v[j];
        const std::int64_t w = v[j + h];
        v[j] = u + w;
        v[j + h] = u - w;
      }
    }
  }
  for (; h < n; h <<= 1) {
    for (std::size_t base = 0; base < n; base += 2 * h) {
      for (std::size_t j = base; j < base + h; j += kLanes) {
        auto* lo = reinterpret_cast<__m256i*>(v.data() + j);
        auto* hi = reinterpret_cast<__m256i*>(v.data() + j + h);
        const __m256i u = _mm256_loadu_si256(lo);
        const __m256i w = _mm256_loadu_si256(hi);
        _mm256_storeu_si256(lo, _mm256_add_epi64(u, w));
        _mm256_storeu_si256(hi, _mm256_sub_epi64(u, w));
      }
    }
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2",   flip_gather_fn, flip_gather_measure, hadamard,
                                 axpy,     dot,            walsh_hadamard_i64};
  return table;
}

}  // namespace flipconc::kernels
