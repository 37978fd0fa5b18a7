#include "olap/studies.hpp"

#include <algorithm>
#include <cmath>

#include "olap/parallel.hpp"

namespace olap {

GridScalar restrict_to(const GridScalar& fine, const Grid& coarse) {
  const Grid& f = fine.grid;
  int r[3];
  for (int a = 0; a < 3; ++a) {
    if (f.n(a) % coarse.n(a) != 0) throw InvalidConfig("fine cell counts must be multiples of the coarse ones");
    r[a] = f.n(a) / coarse.n(a);
  }
  GridScalar out(coarse);
  const double weight = 1.0 / (r[0] * r[1] * r[2]);
  par::for_each(coarse.size(), [&](std::size_t c) {
    const auto q = coarse.coords(c);
    double s = 0.0;
    for (int k = 0; k < r[2]; ++k)
      for (int j = 0; j < r[1]; ++j)
        for (int i = 0; i < r[0]; ++i) s += fine[f.index(q[0] * r[0] + i, q[1] * r[1] + j, q[2] * r[2] + k)];
    out[c] = s * weight;
  });
  return out;
}

GridScalar manufactured_rhs(const FieldSpec& field, const expr::Expression& exact, const Grid& grid, int factor,
                            double w_min) {
  if (factor < 1) throw InvalidConfig("refinement factor must be positive");
  GridConfig fc = grid.config();
  for (auto& n : fc.cells) n *= factor;
  const Grid fine(fc);
  const auto op = assemble_perp_laplacian(field, fine, w_min);
  const GridScalar u = sample_expression(exact, fine);
  GridScalar ku(fine);
  op.matrix.multiply(u.values, ku.values);
  return restrict_to(ku, grid);
}

PoissonSolution solve_perp_poisson(const PerpLaplacian& op, const GridScalar& f, const CgOptions& options) {
  CgOptions o = options;
  Basis constants;
  if (!op.grid.has_dirichlet()) {
    constants.push_back(std::vector<double>(op.grid.size(), 1.0 / std::sqrt(static_cast<double>(op.grid.size()))));
    o.deflation = &constants;
  }
  SolveResult r = cg_solve(op.matrix, f.values, o);
  PoissonSolution s{GridScalar(op.grid), std::move(r.stats)};
  s.u.values = std::move(r.x);
  return s;
}

ErrorNorms solution_error(const GridScalar& u, const expr::Expression& exact, bool remove_mean) {
  const GridScalar ref = sample_expression(exact, u.grid);
  const std::size_t n = u.values.size();
  const double shift =
      remove_mean ? par::sum(n, [&](std::size_t i) { return u[i] - ref[i]; }) / static_cast<double>(n) : 0.0;
  ErrorNorms e;
  e.l2 = std::sqrt(par::sum(n, [&](std::size_t i) {
                     const double d = u[i] - ref[i] - shift;
                     return d * d;
                   }) *
                   u.grid.cell_volume());
  for (std::size_t i = 0; i < n; ++i) e.linf = std::max(e.linf, std::abs(u[i] - ref[i] - shift));
  return e;
}

double ConvergenceStudy::min_order() const {
  return l2_orders.empty() ? 0.0 : *std::min_element(l2_orders.begin(), l2_orders.end());
}

ConvergenceStudy manufactured_convergence(const FieldSpec& field, const expr::Expression& exact,
                                          const GridConfig& base, const std::vector<int>& grids, int fine_factor,
                                          const CgOptions& options, double w_min) {
  ConvergenceStudy study;
  for (int n : grids) {
    GridConfig c = base;
    c.cells = {n, n, n};
    const Grid g(c);
    const auto op = assemble_perp_laplacian(field, g, w_min);
    const auto sol = solve_perp_poisson(op, manufactured_rhs(field, exact, g, fine_factor, w_min), options);
    study.levels.push_back({n, g.min_spacing(), solution_error(sol.u, exact, !g.has_dirichlet()), sol.stats});
  }
  for (std::size_t i = 1; i < study.levels.size(); ++i) {
    const auto& a = study.levels[i - 1];
    const auto& b = study.levels[i];
    study.l2_orders.push_back(std::log(a.error.l2 / b.error.l2) / std::log(a.h / b.h));
  }
  return study;
}

CrossValidation cross_validate(const FieldSpec& field, const GridScalar& u0, const EvolutionConfig& pde,
                               std::size_t n, double dt, std::uint64_t seed, const std::vector<SdeScheme>& schemes,
                               int bins, double w_min) {
  const Grid& g = u0.grid;
  CrossValidation cv{GridScalar(g), {}, {}, {}, std::nullopt, 0.0};
  const auto run = evolve(u0, assemble_fpe_generator(field, g, w_min), pde);
  cv.pde = coarsen(run.final_state, bins);
  cv.noise = expected_l1_noise(cv.pde, n);
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const std::uint64_t s = seed + i;
    cv.ensembles.push_back(simulate(field, g, sample_particles(u0, n, s), dt, pde.T, s, schemes[i]));
    cv.histograms.push_back(histogram(cv.ensembles.back().positions, cv.pde.grid));
    cv.vs_pde.push_back(compare(cv.histograms.back(), cv.pde));
  }
  if (cv.histograms.size() >= 2) cv.between = compare(cv.histograms[0], cv.histograms[1]);
  return cv;
}

}  // namespace olap
