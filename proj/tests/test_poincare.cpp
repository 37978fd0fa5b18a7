#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "olap/assembly.hpp"
#include "olap/krylov.hpp"
#include "olap/poincare.hpp"

using namespace olap;

namespace {

constexpr auto P = Boundary::Periodic;
constexpr auto D = Boundary::Dirichlet0;

Grid make_grid(int n, std::array<Boundary, 3> bc, Origin o = Origin::Corner, double L = 1.0) {
  GridConfig c;
  c.cells = {n, n, n};
  c.extent = {L, L, L};
  c.bc = bc;
  c.origin = o;
  return Grid(c);
}

APerpInputs shear_potentials() {
  APerpInputs in;
  in.clebsch = std::array<expr::Expression, 3>{expr::parse("x"), expr::parse("z"), expr::parse("y")};
  return in;
}

FieldSpec tilted_shear() { return FieldSpec::custom(expr::parse("1"), expr::parse("z"), expr::parse("0.3*x")); }

}  // namespace

TEST_CASE("explicit constructions") {
  const Grid box = make_grid(8, {P, D, D});
  const auto e1 = build_aperp(APerpKind::Example1, FieldSpec::grad_axis(0), box);
  CHECK(e1.value({0.3, 0.2, 0.7}) == Vec3{0, 0, 0.7});
  CHECK(e1.divergence({0.3, 0.2, 0.7}) == 1.0);

  const Grid unit = make_grid(8, {D, D, D});
  const auto cl = build_aperp(APerpKind::Clebsch, FieldSpec::linear_shear(), unit, shear_potentials());
  const Vec3 a = cl.value({0.1, 0.4, 0.6});
  CHECK(a.x == doctest::Approx(0.0));
  CHECK(a.y == doctest::Approx(0.0));
  CHECK(a.z == doctest::Approx(-0.6));
  CHECK(std::abs(cl.divergence({0.1, 0.4, 0.6})) == doctest::Approx(1.0));

  const FieldSpec native = FieldSpec::clebsch(expr::parse("x"), expr::parse("z"), expr::parse("y"));
  const auto cn = build_aperp(APerpKind::Clebsch, native, unit);
  CHECK(cn.value({0.1, 0.4, 0.6}).z == doctest::Approx(-0.6));

  const Grid centered = make_grid(8, {D, D, D}, Origin::Center);
  const auto be = build_aperp(APerpKind::Beltrami, FieldSpec::rotating_shear(1.0), centered);
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (int i = 0; i < 20; ++i) CHECK(be.divergence({d(rng), d(rng), d(rng)}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constructions reject inadmissible fields") {
  const Grid box = make_grid(6, {D, D, D}, Origin::Center);
  CHECK_THROWS_AS(build_aperp(APerpKind::Example1, FieldSpec::abc(1, 0.7, 0.4), box), PreconditionViolation);
  CHECK_THROWS_AS(build_aperp(APerpKind::Beltrami, FieldSpec::abc(1, 0.7, 0.4), box), PreconditionViolation);
  CHECK_THROWS_AS(build_aperp(APerpKind::HelicityDiv, FieldSpec::grad_axis(0), box), PreconditionViolation);
  CHECK_THROWS_AS(build_aperp(APerpKind::Clebsch, FieldSpec::linear_shear(), box), PreconditionViolation);
  APerpInputs wrong;
  wrong.clebsch = std::array<expr::Expression, 3>{expr::parse("x"), expr::parse("y"), expr::parse("z")};
  CHECK_THROWS_AS(build_aperp(APerpKind::Clebsch, FieldSpec::linear_shear(), box, wrong), PreconditionViolation);
  CHECK_THROWS_AS(build_aperp(APerpKind::Beltrami, FieldSpec::rotating_shear(1.0), make_grid(6, {P, D, D})),
                  PreconditionViolation);
  try {
    build_aperp(APerpKind::Example1, FieldSpec::grad_axis(2), make_grid(4, {D, D, D}));
    FAIL("expected a precondition violation");
  } catch (const PreconditionViolation& e) {
    CHECK(e.value() == doctest::Approx(1.0));
  }
}

TEST_CASE("orthogonality holds for every construction") {
  const Grid unit = make_grid(6, {D, D, D});
  const Grid centered = make_grid(6, {D, D, D}, Origin::Center);
  CHECK(build_aperp(APerpKind::Example1, FieldSpec::rotating_shear(1.0), unit).orthogonality <= 1e-8);
  CHECK(build_aperp(APerpKind::Clebsch, FieldSpec::linear_shear(), unit, shear_potentials()).orthogonality <= 1e-8);
  CHECK(build_aperp(APerpKind::HelicityDiv, tilted_shear(), unit).orthogonality <= 1e-8);
  CHECK(build_aperp(APerpKind::HelicityDiv, FieldSpec::rotating_shear(1.0), centered).orthogonality <= 1e-8);
  CHECK(build_aperp(APerpKind::Beltrami, FieldSpec::rotating_shear(1.0), centered).orthogonality <= 1e-8);
}

TEST_CASE("report for the periodic-x gradient field") {
  const Grid box = make_grid(8, {P, D, D});
  const FieldSpec f = FieldSpec::grad_axis(0);
  const auto r = poincare_report(f, build_aperp(APerpKind::Example1, f, box), box);
  CHECK(r.epsilon.value == 1.0);
  CHECK(r.nu.value == doctest::Approx(1.0));
  CHECK(r.c_corollary == doctest::Approx(0.5));
  CHECK(r.c_theorem == 0.0);
  CHECK(r.classification.classification == Classification::Integrable);
  CHECK(r.nu.at.z == doctest::Approx(1.0));
  bool caveat = false;
  for (const auto& n : r.notes) caveat |= n.find("not necessary") != std::string::npos;
  CHECK(caveat);
}

TEST_CASE("report for the linear shear with its Clebsch potentials") {
  const Grid unit = make_grid(8, {D, D, D});
  const FieldSpec f = FieldSpec::linear_shear();
  const auto r = poincare_report(f, build_aperp(APerpKind::Clebsch, f, unit, shear_potentials()), unit);
  CHECK(r.epsilon.value == doctest::Approx(1.0));
  CHECK(r.nu.value == doctest::Approx(1.0));
  CHECK(r.c_corollary == doctest::Approx(0.5));
  CHECK(r.m.value * r.m.value == doctest::Approx(2.0));
  CHECK(r.inf_h.value == doctest::Approx(1.0));
  CHECK(r.c_theorem == doctest::Approx(0.25));
}

TEST_CASE("report for the rotating shear on a centered box") {
  const Grid c = make_grid(8, {D, D, D}, Origin::Center);
  const FieldSpec f = FieldSpec::rotating_shear(1.0);
  const auto r = poincare_report(f, build_aperp(APerpKind::Beltrami, f, c), c);
  CHECK(r.epsilon.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(2.0 * r.nu.value == doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK(r.c_corollary == doctest::Approx(2.0 / std::sqrt(3.0)));
  CHECK(r.sup_aperp.value <= r.nu.value);

  std::ostringstream kv, csv;
  write_key_values(kv, r);
  write_csv(csv, r);
  CHECK(kv.str().find("C_corollary = 1.1547005383792") != std::string::npos);
  CHECK(kv.str().find("aperp = beltrami\n") != std::string::npos);
  CHECK(csv.str().rfind("quantity,value,x,y,z\nepsilon,", 0) == 0);
}

TEST_CASE("helicity classification") {
  const Grid t = make_grid(16, {P, P, P}, Origin::Corner, 2 * std::numbers::pi);
  CHECK(classify_field(FieldSpec::grad_axis(2), t).classification == Classification::Integrable);
  const auto rs = classify_field(FieldSpec::rotating_shear(1.0), t);
  CHECK(rs.classification == Classification::NonIntegrable);
  CHECK(rs.inf_abs_h == doctest::Approx(1.0));
  const auto abc = classify_field(FieldSpec::abc(1, 1, 1), make_grid(32, {P, P, P}, Origin::Corner, 2 * std::numbers::pi));
  CHECK(abc.classification == Classification::NonIntegrable);
  CHECK(abc.near_null);
  CHECK(abc.min_w < 0.5);
  const FieldSpec mixed = FieldSpec::custom(expr::parse("cos(z)"), expr::parse("sin(z)"), expr::parse("0"));
  const FieldSpec half = FieldSpec::custom(expr::parse("1"), expr::parse("z*z"), expr::parse("0"));
  CHECK(classify_field(mixed, t).classification == Classification::NonIntegrable);
  CHECK(classify_field(half, make_grid(7, {P, P, D}, Origin::Center)).classification ==
        Classification::Indeterminate);
}

TEST_CASE("Clebsch divergence equals the helicity") {
  const FieldSpec f = FieldSpec::clebsch(expr::parse("x + 0.2*sin(y)"), expr::parse("1 + 0.5*z"),
                                         expr::parse("y + 0.3*sin(x)"));
  const Grid g = make_grid(6, {D, D, D});
  const auto a = build_aperp(APerpKind::Clebsch, f, g);
  for (const auto& p : probe_points(g)) {
    const double h = std::abs(sample_geometry(f, p).helicity);
    CHECK(std::abs(std::abs(a.divergence(p)) - h) <= 1e-6);
  }
}

TEST_CASE("refinement never improves the sampled constants") {
  const FieldSpec f = tilted_shear();
  double eps = INFINITY, nu = 0.0;
  for (int n : {3, 6, 12}) {
    const Grid g = make_grid(n, {D, D, D});
    const auto r = poincare_report(f, build_aperp(APerpKind::HelicityDiv, f, g), g);
    CHECK(r.epsilon.value <= eps);
    CHECK(r.nu.value >= nu);
    eps = r.epsilon.value;
    nu = r.nu.value;
  }
}

TEST_CASE("bound verification") {
  const Grid box = make_grid(16, {D, D, D});
  const FieldSpec f = FieldSpec::linear_shear();
  const auto r = poincare_report(f, build_aperp(APerpKind::Clebsch, f, box, shear_potentials()), box);
  const auto v = verify_bound(r, assemble_perp_laplacian(f, box).matrix);
  CHECK(v.eigen_converged);
  CHECK(v.pass);
  CHECK(v.corollary.margin > 1.0);

  const Grid t = make_grid(8, {P, P, P}, Origin::Corner, 2 * std::numbers::pi);
  const auto s = smallest_eigs(assemble_perp_laplacian(FieldSpec::grad_axis(2), t).matrix, 1);
  CHECK_FALSE(check_bound(s.eigenvalues[0], 0.5).pass);
  CHECK_FALSE(check_bound(s.eigenvalues[0], 1e-3).pass);
}
