#pragma once

// Multi-step numerical experiments shared by the command line and the
// acceptance suite.

#include <optional>
#include <vector>

#include "olap/assembly.hpp"
#include "olap/diffusion.hpp"
#include "olap/krylov.hpp"
#include "olap/montecarlo.hpp"

namespace olap {

/// Averages a fine cell field onto a grid whose cell counts divide the fine ones.
GridScalar restrict_to(const GridScalar& fine, const Grid& coarse);

/// K u_exact on a grid `factor` times finer, averaged back onto `grid`: the
/// right-hand side f of K u = f whose solution approximates u_exact.
GridScalar manufactured_rhs(const FieldSpec& field, const expr::Expression& exact, const Grid& grid, int factor,
                            double w_min = kDefaultWMin);

struct PoissonSolution {
  GridScalar u;
  SolveStats stats;
};

/// Solves K u = f; constants are deflated when the grid has no Dirichlet axis.
PoissonSolution solve_perp_poisson(const PerpLaplacian& op, const GridScalar& f, const CgOptions& options);

struct ErrorNorms {
  double l2 = 0.0;    // sqrt(sum e^2 dV)
  double linf = 0.0;
};

/// Errors against exact cell-center values; with `remove_mean` the mean
/// difference is subtracted first (solutions defined up to a constant).
ErrorNorms solution_error(const GridScalar& u, const expr::Expression& exact, bool remove_mean = false);

struct ConvergenceLevel {
  int cells = 0;
  double h = 0.0;
  ErrorNorms error;
  SolveStats stats;
};

struct ConvergenceStudy {
  std::vector<ConvergenceLevel> levels;
  std::vector<double> l2_orders;  // between consecutive levels
  double min_order() const;
};

/// Scales `base` to n^3 cells for each n in `grids`.
ConvergenceStudy manufactured_convergence(const FieldSpec& field, const expr::Expression& exact,
                                          const GridConfig& base, const std::vector<int>& grids, int fine_factor,
                                          const CgOptions& options, double w_min = kDefaultWMin);

struct CrossValidation {
  GridScalar pde;                        // PDE solution averaged onto the bins
  std::vector<GridScalar> histograms;    // one per scheme
  std::vector<Ensemble> ensembles;
  std::vector<Discrepancy> vs_pde;
  std::optional<Discrepancy> between;    // first two schemes
  double noise = 0.0;                    // expected l1 of one N-sample histogram
};

/// Evolves u0 with the PDE to time T and runs one ensemble per scheme, each
/// scheme i using seed + i for placement and increments.
CrossValidation cross_validate(const FieldSpec& field, const GridScalar& u0, const EvolutionConfig& pde,
                               std::size_t n, double dt, std::uint64_t seed, const std::vector<SdeScheme>& schemes,
                               int bins, double w_min = kDefaultWMin);

}  // namespace olap
