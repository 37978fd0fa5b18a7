#pragma once

// Preconditioned conjugate gradients with optional deflation of a known
// subspace, and smallest-eigenpair estimation by block inverse subspace
// iteration with locking.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "olap/sparse.hpp"

namespace olap {

using Basis = std::vector<std::vector<double>>;

struct SolveStats {
  std::size_t iterations = 0;
  double residual_norm = 0.0;  // |Pi (b - A x)| at exit
  double rhs_norm = 0.0;       // |b| before projection
  double projected_out = 0.0;  // |b - Pi b|
  bool converged = false;
  bool incompatible_rhs = false;
  std::vector<double> history;  // residual norm per iteration, starting at iteration 0
};

struct CgOptions {
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  bool jacobi = true;
  /// Orthonormal vectors removed from the solution space (kernel of A).
  const Basis* deflation = nullptr;
  /// b is flagged incompatible when |b - Pi b| > incompatibility_tol * |b|.
  double incompatibility_tol = 1e-8;
  /// Solves (A + shift I) x = b.
  double shift = 0.0;
  std::optional<std::span<const double>> x0;
  std::function<void(std::size_t, std::span<const double>)> on_iterate;
};

struct SolveResult {
  std::vector<double> x;
  SolveStats stats;
};

/// Solves A x = b for symmetric positive semidefinite A, restricted to the
/// orthogonal complement of the deflation basis. Returns the best iterate
/// with converged = false when max_iter is reached.
SolveResult cg_solve(const CsrMatrix& A, std::span<const double> b, const CgOptions& options = {});

/// Conjugate gradients on the normal equations A^T A x = A^T b for a general
/// square A. Convergence is tested on |b - A x| <= tol |b|. The deflation
/// basis here restricts the updates: x stays in x0 + complement(basis).
/// shift, jacobi and incompatibility_tol are ignored.
SolveResult cgnr_solve(const CsrMatrix& A, std::span<const double> b, const CgOptions& options = {});

void write_history_csv(std::ostream& os, const SolveStats& stats);

/// Orthonormalizes `v` in place against `against` and then itself (twice
/// repeated Gram-Schmidt). Columns that collapse are dropped.
void orthonormalize(Basis& v, const Basis* against = nullptr);

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending
  std::vector<double> residuals;    // |A v - lambda v| per pair
  std::vector<bool> converged;
  Basis vectors;
  std::size_t sweeps = 0;
  std::size_t inner_iterations = 0;
  bool all_converged() const;
};

struct EigOptions {
  /// Residual tolerance; non-positive means 1e-8 * |A|_inf.
  double tol = 0.0;
  std::size_t max_sweeps = 200;
  double shift = 1e-10;
  const Basis* deflation = nullptr;
  std::uint64_t seed = 0x5eed;
};

/// k smallest eigenpairs of symmetric positive semidefinite A.
SpectrumReport smallest_eigs(const CsrMatrix& A, std::size_t k, const EigOptions& options = {});

/// Upper bound on lambda_max from Gershgorin discs.
double gershgorin_bound(const CsrMatrix& A);

struct NullspaceReport {
  std::optional<std::size_t> dimension;  // empty when inconclusive
  double threshold = 0.0;
  double gap_ratio = 0.0;  // lambda_{m+1} / threshold
  std::size_t k_used = 0;
  SpectrumReport spectrum;
  std::string note;
};

inline constexpr double kNullGap = 100.0;

/// Counts eigenvalues below lambda_null (default 1e-9 * lambda_max bound),
/// doubling k until an eigenvalue at least kNullGap * lambda_null is seen.
NullspaceReport nullspace_dim(const CsrMatrix& A, std::optional<double> lambda_null = {},
                              std::size_t k_start = 4, std::size_t k_max = 256,
                              const EigOptions& options = {});

}  // namespace olap
