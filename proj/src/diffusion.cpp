#include "olap/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include "olap/krylov.hpp"
#include "olap/parallel.hpp"
#include "olap/text.hpp"

namespace olap {

std::string to_string(TimeScheme s) { return s == TimeScheme::ExplicitRk2 ? "rk2" : "implicit_euler"; }

std::optional<TimeScheme> time_scheme_from_string(const std::string& name) {
  if (name == "rk2") return TimeScheme::ExplicitRk2;
  if (name == "implicit_euler") return TimeScheme::ImplicitEuler;
  return std::nullopt;
}

double cfl_dt(double h_min, double sup_w2) { return h_min * h_min / (6.0 * sup_w2); }

double cfl_dt(const Grid& grid, const FieldSpec& field) {
  const auto s = sample_on_grid(field, grid, SampleLocation::Cells, false);
  double sup = 0.0;
  for (const auto& g : s.geometry) sup = std::max(sup, g.magnitude * g.magnitude);
  return cfl_dt(grid.min_spacing(), sup);
}

Diagnostics diagnose(const GridScalar& u, std::optional<int> leaf_axis) {
  const Grid& g = u.grid;
  const double dv = g.cell_volume();
  const std::size_t n = g.size();
  Diagnostics d;
  d.mass = par::sum(n, [&](std::size_t i) { return u[i]; }) * dv;
  d.energy = par::sum(n, [&](std::size_t i) { return u[i] * u[i]; }) * dv;
  const double mean = d.mass / g.volume();
  d.variance = par::sum(n, [&](std::size_t i) { return (u[i] - mean) * (u[i] - mean); }) * dv;
  if (leaf_axis) {
    const int a = *leaf_axis;
    const int leaves = g.n(a);
    d.leaf_mass.assign(static_cast<std::size_t>(leaves), 0.0);
    for (std::size_t i = 0; i < n; ++i) d.leaf_mass[static_cast<std::size_t>(g.coords(i)[a])] += u[i];
    const double leaf_volume = g.volume() / leaves;
    d.leaf_mean.resize(d.leaf_mass.size());
    for (std::size_t l = 0; l < d.leaf_mass.size(); ++l) {
      d.leaf_mass[l] *= dv;
      d.leaf_mean[l] = d.leaf_mass[l] / leaf_volume;
    }
    d.in_leaf_variance = par::sum(n, [&](std::size_t i) {
                           const double e = u[i] - d.leaf_mean[static_cast<std::size_t>(g.coords(i)[a])];
                           return e * e;
                         }) *
                         dv;
  }
  return d;
}

GridScalar normalize_density(GridScalar u0) {
  for (std::size_t i = 0; i < u0.values.size(); ++i) {
    if (!std::isfinite(u0[i])) throw InvalidConfig("initial density is not finite at cell " + std::to_string(i));
    if (u0[i] < 0.0) throw InvalidConfig("initial density is negative at cell " + std::to_string(i));
  }
  const double mass = diagnose(u0).mass;
  if (!(mass > 0.0)) throw InvalidConfig("initial density has zero mass");
  for (auto& v : u0.values) v /= mass;
  return u0;
}

GridScalar gaussian_blob(const Grid& grid, const Vec3& center, double sigma) {
  if (!(sigma > 0.0)) throw InvalidConfig("blob width must be positive");
  GridScalar u(grid);
  par::for_each(grid.size(), [&](std::size_t i) {
    const Vec3 x = grid.center(i);
    double r2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      double d = x[a] - center[a];
      if (grid.bc(a) == Boundary::Periodic) d -= grid.extent(a) * std::round(d / grid.extent(a));
      r2 += d * d;
    }
    u[i] = std::exp(-r2 / (2.0 * sigma * sigma));
  });
  return normalize_density(std::move(u));
}

namespace {

// I - dt L with the diagonal forced into the pattern.
CsrMatrix implicit_matrix(const CsrMatrix& L, double dt) {
  const auto& ptr = L.row_ptr();
  const auto& col = L.col();
  const auto& val = L.values();
  std::size_t widest = 0;
  for (std::size_t i = 0; i < L.rows(); ++i) widest = std::max(widest, ptr[i + 1] - ptr[i]);
  RowAccumulator acc(L.rows(), widest + 1);
  for (std::size_t i = 0; i < L.rows(); ++i) {
    acc.add(i, i, 1.0);
    for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) acc.add(i, col[p], -dt * val[p]);
  }
  return acc.to_csr(L.cols());
}

bool all_finite(const std::vector<double>& u) {
  return std::all_of(u.begin(), u.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

EvolutionResult evolve(const GridScalar& u0, const GeneratorOperator& L, const EvolutionConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.T > 0.0)) throw InvalidConfig("dt and T must be positive");
  if (!(u0.grid == L.grid)) throw InvalidConfig("initial density and generator live on different grids");
  if (cfg.leaf_axis && (*cfg.leaf_axis < 0 || *cfg.leaf_axis > 2)) throw InvalidConfig("leaf axis must be 0, 1 or 2");

  EvolutionResult res{normalize_density(u0), {}, {}, 0, 0.0, false, 0};
  res.steps = static_cast<std::size_t>(std::ceil(cfg.T / cfg.dt * (1.0 - 1e-12)));
  res.dt = cfg.T / static_cast<double>(res.steps);
  const double dt = res.dt;
  if (cfg.scheme == TimeScheme::ExplicitRk2 && cfg.explicit_dt_limit && dt > *cfg.explicit_dt_limit)
    throw InvalidConfig("explicit step " + format_double(dt) + " exceeds the stability limit " +
                        format_double(*cfg.explicit_dt_limit));

  const std::size_t n = L.grid.size();
  auto& u = res.final_state.values;
  auto record = [&](std::size_t step, std::size_t iterations) {
    Diagnostics d = diagnose(res.final_state, cfg.leaf_axis);
    d.step = step;
    d.time = static_cast<double>(step) * dt;
    d.solver_iterations = iterations;
    res.series.push_back(std::move(d));
    if (cfg.stride > 0 && step % cfg.stride == 0)
      res.snapshots.push_back({step, static_cast<double>(step) * dt, res.final_state});
  };
  record(0, 0);

  CsrMatrix A;
  CgOptions cg;
  cg.tol = cfg.solver_tol;
  cg.max_iter = cfg.max_iter;
  cg.jacobi = false;  // unpreconditioned: keeps every residual mass-free
  if (cfg.scheme == TimeScheme::ImplicitEuler) {
    A = implicit_matrix(L.matrix, dt);
    res.normal_equations = L.relative_asymmetry > 1e-12;
  }
  // Mass-preserving updates for the normal equations: x - x0 has zero sum.
  const Basis constants{std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n)))};
  if (res.normal_equations) cg.deflation = &constants;

  std::vector<double> k1(n), k2(n), stage(n);
  for (std::size_t step = 1; step <= res.steps; ++step) {
    std::size_t iterations = 0;
    if (cfg.scheme == TimeScheme::ExplicitRk2) {
      L.matrix.multiply(u, k1);
      par::for_each(n, [&](std::size_t i) { stage[i] = u[i] + dt * k1[i]; });
      L.matrix.multiply(stage, k2);
      par::for_each(n, [&](std::size_t i) { u[i] += 0.5 * dt * (k1[i] + k2[i]); });
    } else {
      cg.x0 = std::span<const double>(u);
      SolveResult s = res.normal_equations ? cgnr_solve(A, u, cg) : cg_solve(A, u, cg);
      if (!s.stats.converged)
        throw EvolutionFailure("implicit solve did not converge at step " + std::to_string(step) +
                                   " (residual " + format_double(s.stats.residual_norm) + ")",
                               step);
      iterations = s.stats.iterations;
      u = std::move(s.x);
    }
    if (!all_finite(u)) throw EvolutionFailure("non-finite density at step " + std::to_string(step), step);
    res.solver_iterations += iterations;
    record(step, iterations);
  }
  return res;
}

void write_diagnostics_csv(std::ostream& os, const std::vector<Diagnostics>& series) {
  const bool leaves = !series.empty() && !series.front().leaf_mass.empty();
  os << "step,time,mass,variance,energy,solver_iterations";
  if (leaves) {
    os << ",in_leaf_variance";
    for (std::size_t l = 0; l < series.front().leaf_mass.size(); ++l) os << ",leaf_mass_" << l;
  }
  os << '\n';
  for (const auto& d : series) {
    os << d.step << ',' << format_double(d.time) << ',' << format_double(d.mass) << ',' << format_double(d.variance)
       << ',' << format_double(d.energy) << ',' << d.solver_iterations;
    if (leaves) {
      os << ',' << format_double(d.in_leaf_variance);
      for (double m : d.leaf_mass) os << ',' << format_double(m);
    }
    os << '\n';
  }
}

std::vector<std::string> write_snapshots(const std::string& dir, const std::vector<Snapshot>& snapshots) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const auto& s : snapshots) {
    char name[40];
    std::snprintf(name, sizeof name, "snapshot_%06zu.olap", s.step);
    paths.push_back((std::filesystem::path(dir) / name).string());
    write_olap(paths.back(), s.u);
  }
  return paths;
}

}  // namespace olap
