#include "olap/parallel.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace olap::par {

namespace {
int g_default_workers = -1;
}

void set_workers(int n) {
#ifdef _OPENMP
  if (g_default_workers < 0) g_default_workers = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : g_default_workers);
#else
  (void)n;
#endif
}

int workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double dot(std::span<const double> a, std::span<const double> b) {
  return sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for_each(x.size(), [&](std::size_t i) { y[i] += alpha * x[i]; });
}

}  // namespace olap::par
