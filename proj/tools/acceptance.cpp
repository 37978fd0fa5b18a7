// Acceptance suite: one PASS/FAIL line per criterion. Arguments select
// criteria by number (default: all). Exit status 1 when any line fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "olap/assembly.hpp"
#include "olap/commands.hpp"
#include "olap/config.hpp"
#include "olap/diffusion.hpp"
#include "olap/krylov.hpp"
#include "olap/montecarlo.hpp"
#include "olap/parallel.hpp"
#include "olap/poincare.hpp"
#include "olap/studies.hpp"

using namespace olap;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr auto P = Boundary::Periodic;
constexpr auto D = Boundary::Dirichlet0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator()(const std::string& key, const T& value) {
    if (!os_.str().empty()) os_ << ' ';
    os_ << key << '=' << value;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_ = [] {
    std::ostringstream o;
    o.precision(4);
    return o;
  }();
};

std::string precise(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Grid make_grid(std::array<int, 3> n, double extent, std::array<Boundary, 3> bc, Origin o = Origin::Corner) {
  GridConfig c;
  c.cells = n;
  c.extent = {extent, extent, extent};
  c.bc = bc;
  c.origin = o;
  return Grid(c);
}

Grid cube(int n, double extent, Boundary bc, Origin o = Origin::Corner) {
  return make_grid({n, n, n}, extent, {bc, bc, bc}, o);
}

Outcome kernel_dichotomy() {
  const Grid torus = cube(16, 2 * kPi, P);
  constexpr double kNull = 1e-10;
  Outcome out{true, {}};
  Detail d;
  auto check = [&](const std::string& name, const FieldSpec& f, std::size_t expected) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = nullspace_dim(assemble_perp_laplacian(f, torus).matrix, kNull, 4, 64);
    const double secs = seconds_since(t0);
    const auto& ev = r.spectrum.eigenvalues;
    const std::size_t dim = r.dimension.value_or(0);
    bool ok = r.dimension && dim == expected && ev.size() > dim && secs < 60.0;
    if (ok) ok = ev[dim - 1] <= kNull && ev[dim] >= kNullGap * kNull;
    d(name + "_dim", r.dimension ? std::to_string(dim) : "inconclusive")
     (name + "_next", ev.size() > dim ? ev[dim] : NAN)(name + "_s", secs);
    out.pass &= ok;
  };
  check("grad_z", FieldSpec::grad_axis(2), 16);
  check("rotating_shear", FieldSpec::rotating_shear(1.0), 1);
  out.detail = d.str();
  return out;
}

Outcome example1_bound() {
  const Grid g = make_grid({4, 32, 32}, 1.0, {P, D, D});
  const FieldSpec f = FieldSpec::grad_axis(0);
  const auto report = poincare_report(f, build_aperp(APerpKind::Example1, f, g), g);
  const auto v = verify_bound(report, assemble_perp_laplacian(f, g).matrix, 0.0);
  const double h = 1.0 / 32;
  const double formula = 2.0 * (4.0 / (h * h)) * std::pow(std::sin(kPi * h / 2), 2);
  const double c = report.c_corollary;
  const bool ok = std::abs(c - 0.5) <= 1e-12 && v.eigen_converged && v.lambda_min >= c * c &&
                  std::abs(v.lambda_min - formula) <= 1e-6;
  Detail d;
  d("C", c)("lambda_min", v.lambda_min)("five_point", formula)("diff", std::abs(v.lambda_min - formula))
   ("margin", v.corollary.margin);
  return {ok, d.str()};
}

Outcome example2_bound() {
  const Grid g = cube(32, 1.0, D);
  const FieldSpec f = FieldSpec::linear_shear();
  APerpInputs in;
  in.clebsch = std::array{expr::parse("x"), expr::parse("z"), expr::parse("y")};
  const auto report = poincare_report(f, build_aperp(APerpKind::Clebsch, f, g, in), g);
  const auto v = verify_bound(report, assemble_perp_laplacian(f, g).matrix);
  const bool constants = std::abs(report.c_theorem - 0.25) <= 1e-6 && std::abs(report.c_corollary - 0.5) <= 1e-6;
  const bool ok = constants && v.eigen_converged && v.lambda_min >= 0.25 * 0.25 * 0.9 &&
                  v.lambda_min >= 0.5 * 0.5 * 0.9;
  Detail d;
  d("lambda_min", v.lambda_min)("C_theorem", report.c_theorem)("margin_theorem", v.theorem.margin)
   ("C_corollary", report.c_corollary)("margin_corollary", v.corollary.margin);
  return {ok, d.str()};
}

Outcome example4_bound() {
  const FieldSpec f = FieldSpec::rotating_shear(1.0);
  const double c_expected = 2.0 / std::sqrt(3.0);
  bool ok = true;
  std::vector<double> margins;
  Detail d;
  for (int n : {32, 48}) {
    const auto t0 = std::chrono::steady_clock::now();
    const Grid g = cube(n, 1.0, D, Origin::Center);
    const auto report = poincare_report(f, build_aperp(APerpKind::Beltrami, f, g), g);
    const auto v = verify_bound(report, assemble_perp_laplacian(f, g).matrix);
    const double c = report.c_corollary;
    ok &= std::abs(c - c_expected) <= 1e-9 && v.eigen_converged && v.lambda_min >= c * c * 0.9;
    margins.push_back(v.corollary.margin);
    const std::string s = std::to_string(n);
    d("C_" + s, c)("lambda_min_" + s, precise(v.lambda_min))("margin_" + s, precise(v.corollary.margin))
     ("seconds_" + s, seconds_since(t0));
  }
  ok &= margins[1] >= margins[0];
  return {ok, d.str()};
}

// max over cell centers of |D_h . a_perp + div w_hat| with central differences of step h.
double identity_residual(const FieldSpec& f, const Grid& g) {
  const auto a = build_aperp(APerpKind::HelicityDiv, f, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 p = g.center(i);
    double div = 0.0;
    for (int ax = 0; ax < 3; ++ax) {
      const double h = g.spacing(ax);
      Vec3 e;
      e[ax] = h;
      div += (a.value(p + e)[ax] - a.value(p - e)[ax]) / (2 * h);
    }
    worst = std::max(worst, std::abs(div + sample_geometry(f, p).div_unit));
  }
  return worst;
}

Outcome helicity_identity() {
  bool ok = true;
  Detail d;
  const FieldSpec tilted = FieldSpec::custom(expr::parse("1"), expr::parse("z"), expr::parse("0.3*x"));
  const double t16 = identity_residual(tilted, cube(16, 1.0, D));
  const double t32 = identity_residual(tilted, cube(32, 1.0, D));
  ok &= t16 / t32 >= 3.5;
  d("tilted_shear_16", t16)("tilted_shear_32", t32)("ratio", t16 / t32);
  const double l32 = identity_residual(FieldSpec::linear_shear(), cube(32, 1.0, D));
  const double r32 = identity_residual(FieldSpec::rotating_shear(1.0), cube(32, 1.0, D, Origin::Center));
  ok &= l32 <= 1e-3 && r32 <= 1e-3;
  d("linear_shear_32", l32)("rotating_shear_32", r32);
  return {ok, d.str()};
}

Outcome weak_convergence() {
  GridConfig base;
  base.extent = {1, 1, 1};
  base.bc = {D, D, D};
  CgOptions cg;
  cg.tol = 1e-10;
  cg.max_iter = 5000;
  const auto s = manufactured_convergence(FieldSpec::linear_shear(), expr::parse("sin(pi*x)*sin(pi*y)*sin(pi*z)"),
                                          base, {16, 32}, 2, cg);
  bool ok = s.min_order() >= 1.8;
  Detail d;
  d("l2_order", s.min_order());
  for (const auto& l : s.levels) {
    ok &= l.stats.converged && l.stats.iterations < 5000;
    d("iterations_" + std::to_string(l.cells), l.stats.iterations)("l2_error_" + std::to_string(l.cells), l.error.l2);
  }
  return {ok, d.str()};
}

// Smooth, zero on the box faces, randomly modulated.
GridScalar zero_trace(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::uniform_int_distribution<int> mode(1, 2);
  const double a = d(rng), b = d(rng), c = d(rng), e = d(rng);
  const int kx = mode(rng), ky = mode(rng), kz = mode(rng);
  GridScalar u(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 p = g.center(i);
    const double bubble = std::sin(kx * kPi * p.x) * std::sin(ky * kPi * p.y) * std::sin(kz * kPi * p.z);
    u[i] = bubble * (1.0 + 0.5 * a * p.x + 0.5 * b * std::cos(2 * p.y + c) + 0.5 * e * p.z * p.x);
  }
  return u;
}

Outcome weak_form_identity() {
  auto errors = [](int n) {
    const Grid g = cube(n, 1.0, D);
    const FieldSpec f = FieldSpec::linear_shear();
    const auto op = assemble_perp_laplacian(f, g);
    const auto unit = unit_at_cells(f, g);
    std::mt19937_64 rng(2026);
    std::vector<double> rel;
    for (int t = 0; t < 20; ++t) {
      const GridScalar u = zero_trace(g, rng);
      const GridScalar v = zero_trace(g, rng);
      const double form = perp_form(op, u.values, v.values);
      const double ip = inner_products(u, v, unit).perp;
      rel.push_back(std::abs(form - ip) / std::abs(ip));
    }
    return rel;
  };
  const auto e16 = errors(16);
  const auto e32 = errors(32);
  const double worst16 = *std::max_element(e16.begin(), e16.end());
  const double worst32 = *std::max_element(e32.begin(), e32.end());
  std::size_t improved = 0;
  for (std::size_t i = 0; i < e32.size(); ++i) improved += e32[i] < e16[i];
  const bool ok = worst32 <= 0.05 && improved == e32.size();
  Detail d;
  d("worst_rel_16", worst16)("worst_rel_32", worst32)("improved", std::to_string(improved) + "/20");
  return {ok, d.str()};
}

Outcome diffusion_dichotomy() {
  const Grid torus = cube(32, 2 * kPi, P);
  Detail d;
  EvolutionConfig cfg;
  cfg.scheme = TimeScheme::ImplicitEuler;
  cfg.dt = 0.02;
  cfg.T = 5.0;

  const auto t0 = std::chrono::steady_clock::now();
  const auto mixing = evolve(gaussian_blob(torus, torus.center_of_box(), 0.4),
                             assemble_fpe_generator(FieldSpec::rotating_shear(1.0), torus), cfg);
  const auto& a0 = mixing.series.front();
  const double ratio = mixing.series.back().variance / a0.variance;
  double drift = 0.0;
  for (const auto& s : mixing.series) drift = std::max(drift, std::abs(s.mass - a0.mass));
  const bool ok_a = ratio <= 0.01 && drift <= 1e-12;
  d("a_variance_ratio", ratio)("a_mass_drift", drift)("a_seconds", seconds_since(t0));

  cfg.leaf_axis = 2;
  const auto layered = evolve(gaussian_blob(torus, torus.center_of_box(), 0.5),
                              assemble_fpe_generator(FieldSpec::grad_axis(2), torus), cfg);
  const auto& b0 = layered.series.front();
  double leaf_drift = 0.0;
  for (const auto& s : layered.series)
    for (std::size_t l = 0; l < s.leaf_mass.size(); ++l)
      leaf_drift = std::max(leaf_drift, std::abs(s.leaf_mass[l] - b0.leaf_mass[l]));
  const double decay = b0.in_leaf_variance / layered.series.back().in_leaf_variance;
  const bool ok_b = leaf_drift <= 1e-12 && decay >= 100.0;
  d("b_leaf_mass_drift", leaf_drift)("b_in_leaf_decay", decay);
  return {ok_a && ok_b, d.str()};
}

CrossValidation run_cross_validation(const FieldSpec& f) {
  const Grid torus = cube(32, 2 * kPi, P);
  EvolutionConfig pde;
  pde.scheme = TimeScheme::ExplicitRk2;
  pde.dt = cfl_dt(torus, f);
  pde.explicit_dt_limit = pde.dt;
  pde.T = 0.5;
  return cross_validate(f, gaussian_blob(torus, torus.center_of_box(), 0.5), pde, 200000, 0.005, 20261016,
                        {SdeScheme::ItoEuler, SdeScheme::StratonovichHeun}, 8);
}

Outcome sde_pde_cross_validation() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cv = run_cross_validation(FieldSpec::rotating_shear(1.0));
  const double secs = seconds_since(t0);
  const double pair_tol = 2.0 * std::sqrt(2.0) * cv.noise;
  const bool ok = cv.vs_pde[0].l1 <= 0.1 && cv.vs_pde[1].l1 <= 0.1 && cv.between->l1 <= pair_tol && secs < 180.0;
  Detail d;
  d("l1_ito", cv.vs_pde[0].l1)("l1_stratonovich", cv.vs_pde[1].l1)("l1_ito_vs_stratonovich", cv.between->l1)
   ("pair_tolerance", pair_tol)("seconds", secs);

  // Non-constant |w|: which interpretation reproduces the flux-form evolution.
  const auto disc = run_cross_validation(
      FieldSpec::custom(expr::parse("1"), expr::parse("2*sin(z)"), expr::parse("0")));
  const bool strat = disc.vs_pde[1].l1 < disc.vs_pde[0].l1;
  d("varying_w_l1_ito", disc.vs_pde[0].l1)("varying_w_l1_stratonovich", disc.vs_pde[1].l1)
   ("matching_scheme", strat ? "stratonovich_heun" : "ito_euler");
  return {ok, d.str()};
}

constexpr const char* kConvergenceConfig = R"toml(
[domain]
cells = 32
extent = 1.0
bc = "dirichlet"
[field]
kind = "linear_shear"
[problem]
exact = "sin(pi*x)*sin(pi*y)*sin(pi*z)"
[solver]
tol = 1e-10
max_iter = 5000
[convergence]
grids = [16, 32]
)toml";

constexpr const char* kTorusConfig = R"toml(
[domain]
cells = 32
extent = "2*pi"
bc = "periodic"
[field]
kind = "rotating_shear"
[evolve]
scheme = "implicit_euler"
dt = 0.02
T = 5.0
stride = 50
blob_sigma = 0.4
[mc]
N = 200000
dt = 0.005
T = 0.5
seed = 20261016
scheme = "both"
bins = 8
)toml";

constexpr const char* kLayeredConfig = R"toml(
[domain]
cells = 32
extent = "2*pi"
bc = "periodic"
[field]
kind = "grad_axis"
axis = "z"
[evolve]
dt = 0.02
T = 5.0
stride = 50
leaf_axis = "z"
blob_sigma = 0.5
)toml";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome determinism(const fs::path& scratch) {
  struct Run {
    std::string name, command;
    const char* config;
  };
  const std::vector<Run> runs = {{"convergence", "convergence", kConvergenceConfig},
                                 {"evolve_mixing", "evolve", kTorusConfig},
                                 {"evolve_layered", "evolve", kLayeredConfig},
                                 {"mc", "mc", kTorusConfig}};
  bool ok = true;
  Detail d;
  std::size_t files = 0;
  std::ostringstream log;
  for (const auto& r : runs) {
    const RunConfig cfg = parse_config(r.config);
    std::map<int, fs::path> dirs;
    for (int w : {1, 4}) {
      dirs[w] = scratch / (r.name + "_w" + std::to_string(w));
      fs::remove_all(dirs[w]);
      par::set_workers(w);
      const int code = run_command(r.command, cfg, dirs[w].string(), log, log);
      par::set_workers(0);
      if (code != kExitOk) {
        ok = false;
        d(r.name, "exit_" + std::to_string(code));
      }
    }
    std::size_t differing = 0;
    for (const auto& e : fs::recursive_directory_iterator(dirs[1])) {
      if (!e.is_regular_file() || e.path().filename() == "metadata.toml") continue;
      ++files;
      const fs::path twin = dirs[4] / fs::relative(e.path(), dirs[1]);
      if (!fs::exists(twin) || slurp(e.path()) != slurp(twin)) ++differing;
    }
    ok &= differing == 0;
    d(r.name + "_differing", differing);
    for (const auto& [w, dir] : dirs) fs::remove_all(dir);
  }
  d("files_compared", files);
  ok &= files > 0;
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  const fs::path scratch = fs::temp_directory_path() / "olap_acceptance";
  fs::create_directories(scratch);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, kernel_dichotomy},
      {2, example1_bound},
      {3, example2_bound},
      {4, example4_bound},
      {5, helicity_identity},
      {6, weak_convergence},
      {7, weak_form_identity},
      {8, diffusion_dichotomy},
      {9, sde_pde_cross_validation},
      {10, [&] { return determinism(scratch); }},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  fs::remove_all(scratch);
  return failed == 0 ? 0 : 1;
}
