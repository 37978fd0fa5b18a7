#pragma once

// Data-parallel helpers. Reductions use a fixed block decomposition that does
// not depend on the worker count, so results are bit-identical for any
// number of workers.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace olap::par {

/// Caps the number of worker threads (n <= 0 restores the runtime default).
void set_workers(int n);
int workers();

inline constexpr std::size_t kReductionBlock = 2048;

template <class F>
void for_each(std::size_t n, F&& f) {
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
}

/// Deterministic sum of term(i) for i in [0, n).
template <class F>
double sum(std::size_t n, F&& term) {
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = lo + kReductionBlock < n ? lo + kReductionBlock : n;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace olap::par
