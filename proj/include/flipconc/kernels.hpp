#pragma once

// Data-parallel inner loops of the exact engine.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active table is picked once at startup from CPUID; setting
// FLIPCONC_SIMD=scalar in the environment forces the reference path.
// Elementwise kernels are bit-identical across variants (same operations,
// no contraction); reductions (dot) differ only by summation order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace flipconc::kernels {

struct KernelTable {
  std::string_view name;

  /// y[s] += a[s] * x[s ^ mask]   (function-side jump term)
  void (*flip_gather_fn)(std::span<double> y, std::span<const double> a,
                         std::span<const double> x, std::uint64_t mask);
  /// y[s] += a[s ^ mask] * x[s ^ mask]   (measure-side jump term)
  void (*flip_gather_measure)(std::span<double> y, std::span<const double> a,
                              std::span<const double> x, std::uint64_t mask);
  /// y[s] = a[s] * x[s]
  void (*hadamard)(std::span<double> y, std::span<const double> a,
                   std::span<const double> x);
  /// y[s] += alpha * x[s]
  void (*axpy)(std::span<double> y, double alpha, std::span<const double> x);
  /// sum_s a[s] * b[s]
  double (*dot)(std::span<const double> a, std::span<const double> b);
  /// In-place unnormalized Walsh-Hadamard transform over 2^m entries:
  /// v[S] <- sum_T (-1)^{|S & T|} v[T]. Integer arithmetic, exact when
  /// sum |v| fits in int64.
  void (*walsh_hadamard_i64)(std::span<std::int64_t> v);
};

const KernelTable& scalar();
/// nullptr when the variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2();
/// The table used by the library.
const KernelTable& active();

}  // namespace flipconc::kernels
