#include "flipconc/kernels.hpp"

namespace flipconc::kernels {
namespace {

void flip_gather_fn(std::span<double> y, std::span<const double> a,
                    std::span<const double> x, std::uint64_t mask) {
  const std::size_t n = y.size();
  for (std::size_t s = 0; s < n; ++s) y[s] += a[s] * x[s ^ mask];
}

void flip_gather_measure(std::span<double> y, std::span<const double> a,
                         std::span<const double> x, std::uint64_t mask) {
  const std::size_t n = y.size();
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t src = s ^ mask;
    y[s] += a[src] * x[src];
  }
}

void hadamard(std::span<double> y, std::span<const double> a,
              std::span<const double> x) {
  for (std::size_t s = 0; s < y.size(); ++s) y[s] = a[s] * x[s];
}

void axpy(std::span<double> y, double alpha, std::span<const double> x) {
  for (std::size_t s = 0; s < y.size(); ++s) y[s] += alpha * x[s];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) acc += a[s] * b[s];
  return acc;
}

void walsh_hadamard_i64(std::span<std::int64_t> v) {
  const std::size_t n = v.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t base = 0; base < n; base += 2 * h) {
      for (std::size_t j = base; j < base + h; ++j) {
        const std::int64_t u = v[j];
        const std::int64_t w = v[j + h];
        v[j] = u + w;
        v[j + h] = u - w;
      }
    }
  }
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{"scalar",  flip_gather_fn, flip_gather_measure, hadamard,
                                 axpy,      dot,            walsh_hadamard_i64};
  return table;
}

}  // namespace flipconc::kernels
