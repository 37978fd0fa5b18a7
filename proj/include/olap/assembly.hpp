#pragma once

// Discrete orthogonal Laplacian and diffusion generator on a cell-centered
// grid. Every cell is a degree of freedom (DOF i is cell i); Dirichlet data
// enter through odd-reflection ghosts, so no boundary unknowns exist.
//
// Both operators come from a face-based quadratic energy
//
//   E(u) = sum_faces (V_f / 3) [ g^T T_f g + T_bb Var(d_b) + T_cc Var(d_c) ]
//
// where g holds the compact normal difference and the means of the four
// tangential half-differences next to the face, Var is the spread of those
// four differences and T_f is the arithmetic mean of the two adjacent cell
// tensors. E is positive semidefinite by construction, reduces to the 5-point
// Laplacian for axis-aligned fields and gives an exactly symmetric matrix.

#include <span>
#include <vector>

#include "olap/field.hpp"
#include "olap/grid.hpp"
#include "olap/sparse.hpp"

namespace olap {

/// K ~ -Laplacian_perp acting on cell values: u^T K u dV approximates the
/// integral of |grad_perp u|^2, so K is symmetric positive semidefinite.
struct PerpLaplacian {
  Grid grid;
  CsrMatrix matrix;
  double min_magnitude = 0.0;
};

PerpLaplacian assemble_perp_laplacian(const FieldSpec& field, const Grid& grid,
                                      double w_min = kDefaultWMin);

/// Weak form dV * v^T K u, the discrete counterpart of (grad_perp u, grad_perp v).
double perp_form(const PerpLaplacian& op, std::span<const double> u, std::span<const double> v);

/// L u = 1/2 div( w^2 grad_perp u + u w x curl w ), zero normal flux on
/// non-periodic axes. Columns sum to zero.
struct GeneratorOperator {
  Grid grid;
  CsrMatrix matrix;
  /// max |L - L^T| relative to max |L|.
  double relative_asymmetry = 0.0;
};

GeneratorOperator assemble_fpe_generator(const FieldSpec& field, const Grid& grid,
                                         double w_min = kDefaultWMin);

/// Pointwise expanded stationary operator
///   Lap_perp u + (b + 3/2 grad_perp log w^2) . grad_perp u
///     + (grad_perp log w^2 . b + B + Lap_perp(w^2) / (2 w^2)) u
/// with central differences for derivatives of u and analytic field geometry.
GridScalar fpe_stationary_residual(const GridScalar& u, const FieldSpec& field,
                                   double w_min = kDefaultWMin);

/// (2 / w^2) L u, the flux-form counterpart of fpe_stationary_residual.
GridScalar flux_form_residual(const GeneratorOperator& gen, const GridScalar& u,
                              const FieldSpec& field);

}  // namespace olap
