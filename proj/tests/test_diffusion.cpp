#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "olap/diffusion.hpp"

using namespace olap;

namespace {

constexpr auto P = Boundary::Periodic;
constexpr auto D = Boundary::Dirichlet0;

Grid make_grid(int n, std::array<Boundary, 3> bc, double L = 1.0) {
  GridConfig c;
  c.cells = {n, n, n};
  c.extent = {L, L, L};
  c.bc = bc;
  return Grid(c);
}

Grid torus(int n) { return make_grid(n, {P, P, P}, 2 * std::numbers::pi); }

GridScalar noisy(const Grid& g, std::uint64_t seed) {
  GridScalar u(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.5, 1.5);
  for (auto& v : u.values) v = d(rng);
  return u;
}

}  // namespace

TEST_CASE("explicit step limit") {
  CHECK(cfl_dt(make_grid(32, {D, D, D}), FieldSpec::rotating_shear(1.0)) ==
        doctest::Approx(1.0 / (32.0 * 32.0 * 6.0)).epsilon(1e-12));
  CHECK(cfl_dt(1.0 / 32, 1.0) == doctest::Approx(1.6276e-4).epsilon(1e-4));
  CHECK(cfl_dt(make_grid(32, {D, D, D}), FieldSpec::rotating_shear(1.0)) ==
        doctest::Approx(cfl_dt(make_grid(16, {D, D, D}), FieldSpec::rotating_shear(1.0)) / 4.0));
  const FieldSpec doubled = FieldSpec::custom(expr::parse("2*sin(z)"), expr::parse("2*cos(z)"), expr::parse("0"));
  const Grid g = make_grid(16, {D, D, D});
  CHECK(cfl_dt(g, doubled) == doctest::Approx(cfl_dt(g, FieldSpec::rotating_shear(1.0)) / 4.0));
}

TEST_CASE("explicit stepping is stable at the limit and unstable beyond it") {
  const Grid g = torus(12);
  const FieldSpec f = FieldSpec::rotating_shear(1.0);
  const auto L = assemble_fpe_generator(f, g);
  const GridScalar u0 = noisy(g, 5);
  EvolutionConfig e;
  e.scheme = TimeScheme::ExplicitRk2;
  e.dt = cfl_dt(g, f);
  e.T = 300 * e.dt;
  const auto ok = evolve(u0, L, e);
  for (std::size_t s = 1; s < ok.series.size(); ++s) CHECK(ok.series[s].variance <= ok.series[s - 1].variance);

  e.dt *= 4.0;
  e.T = 300 * e.dt;
  bool blew_up = false;
  try {
    const auto bad = evolve(u0, L, e);
    blew_up = bad.series.back().variance > 1e6 * bad.series.front().variance;
  } catch (const EvolutionFailure&) {
    blew_up = true;
  }
  CHECK(blew_up);

  e.explicit_dt_limit = cfl_dt(g, f);
  CHECK_THROWS_AS(evolve(u0, L, e), InvalidConfig);
}

TEST_CASE("mass conservation over 1000 steps") {
  const Grid g = make_grid(8, {D, D, D});
  const FieldSpec f = FieldSpec::linear_shear();
  const auto L = assemble_fpe_generator(f, g);
  REQUIRE(L.relative_asymmetry > 1e-12);
  const GridScalar u0 = noisy(g, 9);
  for (auto scheme : {TimeScheme::ExplicitRk2, TimeScheme::ImplicitEuler}) {
    EvolutionConfig e;
    e.scheme = scheme;
    e.dt = cfl_dt(g, f);
    e.T = 1000 * e.dt;
    const auto r = evolve(u0, L, e);
    CHECK(r.steps == 1000);
    CHECK(r.normal_equations == (scheme == TimeScheme::ImplicitEuler));
    for (const auto& d : r.series) CHECK(std::abs(d.mass - 1.0) <= 1e-12);
  }
}

TEST_CASE("implicit energy is non-increasing for a symmetric generator") {
  const Grid g = torus(10);
  const auto L = assemble_fpe_generator(FieldSpec::abc(1.0, 0.8, 0.6), g, 1e-3);
  const FieldSpec f = FieldSpec::rotating_shear(1.0);
  const auto S = assemble_fpe_generator(f, g);
  CHECK(S.relative_asymmetry == 0.0);
  EvolutionConfig e;
  e.dt = 0.05;
  e.T = 2.0;
  const auto r = evolve(noisy(g, 2), S, e);
  CHECK_FALSE(r.normal_equations);
  for (std::size_t s = 1; s < r.series.size(); ++s) CHECK(r.series[s].energy <= r.series[s - 1].energy);
  CHECK(L.matrix.rows() == g.size());
}

TEST_CASE("uniform density is stationary for a Beltrami field") {
  const Grid g = torus(12);
  const auto L = assemble_fpe_generator(FieldSpec::rotating_shear(1.0), g);
  for (auto scheme : {TimeScheme::ExplicitRk2, TimeScheme::ImplicitEuler}) {
    EvolutionConfig e;
    e.scheme = scheme;
    e.dt = scheme == TimeScheme::ExplicitRk2 ? cfl_dt(g, FieldSpec::rotating_shear(1.0)) : 0.1;
    e.T = 20 * e.dt;
    const auto r = evolve(GridScalar(g, 3.0), L, e);
    const double uniform = 1.0 / g.volume();
    for (double v : r.final_state.values) CHECK(std::abs(v - uniform) <= 1e-12 * uniform);
  }
}

TEST_CASE("gradient field keeps every leaf mass") {
  const Grid g = torus(10);
  const auto L = assemble_fpe_generator(FieldSpec::grad_axis(2), g);
  for (auto scheme : {TimeScheme::ExplicitRk2, TimeScheme::ImplicitEuler}) {
    EvolutionConfig e;
    e.scheme = scheme;
    e.dt = scheme == TimeScheme::ExplicitRk2 ? cfl_dt(g, FieldSpec::grad_axis(2)) : 0.05;
    e.T = 40 * e.dt;
    e.leaf_axis = 2;
    const auto r = evolve(gaussian_blob(g, {1.0, 2.0, 3.0}, 0.7), L, e);
    REQUIRE(r.series.front().leaf_mass.size() == 10);
    for (std::size_t s = 1; s < r.series.size(); ++s)
      for (std::size_t l = 0; l < 10; ++l)
        CHECK(std::abs(r.series[s].leaf_mass[l] - r.series[s - 1].leaf_mass[l]) <= 1e-12);
    CHECK(r.series.back().in_leaf_variance < r.series.front().in_leaf_variance);
  }
}

TEST_CASE("dichotomy at small scale") {
  const Grid g = torus(16);
  const GridScalar blob = gaussian_blob(g, g.center_of_box(), 0.5);
  EvolutionConfig e;
  e.dt = 0.05;
  e.T = 5.0;
  e.leaf_axis = 2;
  const auto mixing = evolve(blob, assemble_fpe_generator(FieldSpec::rotating_shear(1.0), g), e);
  const auto layered = evolve(blob, assemble_fpe_generator(FieldSpec::grad_axis(2), g), e);
  const double mixed = mixing.series.back().variance / mixing.series.front().variance;
  const double kept = layered.series.back().variance / layered.series.front().variance;
  CHECK(mixed < 0.05);
  // The leaf means survive, so most of the variance cannot decay.
  const double between = layered.series.front().variance - layered.series.front().in_leaf_variance;
  CHECK(layered.series.back().variance >= 0.99 * between);
  CHECK(kept > mixed);
}

TEST_CASE("initial density validation") {
  const Grid g = make_grid(4, {P, P, P});
  GridScalar u(g, 1.0);
  u[3] = -1e-3;
  CHECK_THROWS_AS(normalize_density(u), InvalidConfig);
  u[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(normalize_density(u), InvalidConfig);
  CHECK_THROWS_AS(normalize_density(GridScalar(g, 0.0)), InvalidConfig);
  const auto n = normalize_density(GridScalar(g, 5.0));
  CHECK(diagnose(n).mass == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(diagnose(n).variance == 0.0);
  CHECK_THROWS_AS(gaussian_blob(g, {0.5, 0.5, 0.5}, 0.0), InvalidConfig);
}

TEST_CASE("blob uses periodic images") {
  const Grid g = make_grid(8, {P, P, P});
  const auto a = gaussian_blob(g, {0.0, 0.5, 0.5}, 0.1);
  CHECK(a[g.index(0, 4, 4)] == doctest::Approx(a[g.index(7, 4, 4)]));
}

TEST_CASE("non-finite states abort with the step index") {
  const Grid g = make_grid(4, {P, P, P});
  auto L = assemble_fpe_generator(FieldSpec::grad_axis(0), g);
  auto vals = L.matrix.values();
  vals[5] = std::numeric_limits<double>::infinity();
  L.matrix = CsrMatrix(L.matrix.rows(), L.matrix.cols(), L.matrix.row_ptr(), L.matrix.col(), vals);
  EvolutionConfig e;
  e.scheme = TimeScheme::ExplicitRk2;
  e.dt = 0.001;
  e.T = 0.01;
  try {
    evolve(GridScalar(g, 1.0), L, e);
    FAIL("expected an evolution failure");
  } catch (const EvolutionFailure& f) {
    CHECK(f.step() == 1);
  }
}

TEST_CASE("implicit solver failure is reported") {
  const Grid g = torus(8);
  EvolutionConfig e;
  e.dt = 0.5;
  e.T = 1.0;
  e.max_iter = 1;
  CHECK_THROWS_AS(evolve(noisy(g, 1), assemble_fpe_generator(FieldSpec::rotating_shear(1.0), g), e),
                  EvolutionFailure);
}

TEST_CASE("diagnostics and snapshots") {
  const Grid g = torus(6);
  EvolutionConfig e;
  e.dt = 0.1;
  e.T = 0.5;
  e.stride = 2;
  e.leaf_axis = 2;
  const auto r = evolve(noisy(g, 4), assemble_fpe_generator(FieldSpec::grad_axis(2), g), e);
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshots[1].step == 2);
  CHECK(r.series.size() == 6);

  std::ostringstream csv;
  write_diagnostics_csv(csv, r.series);
  CHECK(csv.str().rfind("step,time,mass,variance,energy,solver_iterations,in_leaf_variance,leaf_mass_0,", 0) == 0);

  const auto dir = std::filesystem::temp_directory_path() / "olap_snapshots_test";
  std::filesystem::remove_all(dir);
  const auto paths = write_snapshots(dir.string(), r.snapshots);
  REQUIRE(paths.size() == 3);
  CHECK(std::filesystem::path(paths[2]).filename() == "snapshot_000004.olap");
  const auto back = read_olap(paths[2]);
  CHECK(back.payload == r.snapshots[2].u.values);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scheme names") {
  CHECK(time_scheme_from_string("rk2") == TimeScheme::ExplicitRk2);
  CHECK(time_scheme_from_string(to_string(TimeScheme::ImplicitEuler)) == TimeScheme::ImplicitEuler);
  CHECK_FALSE(time_scheme_from_string("euler").has_value());
}
