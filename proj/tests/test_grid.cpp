#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "olap/grid.hpp"

using namespace olap;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Grid torus(int n, double L = kTwoPi) {
  GridConfig c;
  c.cells = {n, n, n};
  c.extent = {L, L, L};
  return Grid(c);
}

Grid dirichlet_box(int n, Origin origin = Origin::Corner) {
  GridConfig c;
  c.cells = {n, n, n};
  c.origin = origin;
  c.bc = {Boundary::Dirichlet0, Boundary::Dirichlet0, Boundary::Dirichlet0};
  return Grid(c);
}

GridScalar random_smooth(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const double a = d(rng), b = d(rng), c = d(rng), e = d(rng);
  GridScalar u(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 p = g.center(i);
    u[i] = a * std::sin(p.x + b) * std::cos(2 * p.y + c) + e * std::sin(p.z - a * p.y);
  }
  return u;
}

}  // namespace

TEST_CASE("grid construction") {
  GridConfig c;
  c.cells = {4, 4, 4};
  const Grid g = build_grid(c);
  CHECK(g.center(0, 0, 0) == Vec3{0.125, 0.125, 0.125});
  CHECK(g.size() == 64);
  CHECK(g.center(g.index(3, 2, 1)) == Vec3{0.875, 0.625, 0.375});

  c.extent = {0, 1, 1};
  CHECK_THROWS_AS(build_grid(c), InvalidConfig);
  c.extent = {1, 1, 1};
  c.cells = {4, 0, 4};
  CHECK_THROWS_AS(build_grid(c), InvalidConfig);

  c.cells = {4, 4, 4};
  c.origin = Origin::Center;
  const Grid h = build_grid(c);
  CHECK(h.center(0, 0, 0) == Vec3{-0.375, -0.375, -0.375});
  CHECK(h.center(3, 3, 3) == Vec3{0.375, 0.375, 0.375});
}

TEST_CASE("boundary index mapping") {
  GridConfig c;
  c.cells = {4, 5, 6};
  c.bc = {Boundary::Periodic, Boundary::Dirichlet0, Boundary::Dirichlet0};
  const Grid g(c);
  CHECK(g.map(-1, 2, 2).index == g.index(3, 2, 2));
  CHECK(g.map(4, 2, 2).sign == 1.0);
  CHECK(g.map(1, -1, 2).index == g.index(1, 0, 2));
  CHECK(g.map(1, -1, 2).sign == -1.0);
  CHECK(g.map(1, 5, 6).index == g.index(1, 4, 5));
  CHECK(g.map(1, 5, 6).sign == 1.0);
  CHECK(g.face_count_along(0) == 4);
  CHECK(g.face_count_along(1) == 6);
}

TEST_CASE("sampling records extrema") {
  const Grid g = torus(16);
  const auto rs = sample_on_grid(FieldSpec::rotating_shear(1.0), g);
  CHECK(std::abs(rs.min_magnitude - 1.0) <= 1e-12);
  CHECK(rs.inf_abs_helicity == doctest::Approx(1.0).epsilon(1e-12));

  const auto gx = sample_on_grid(FieldSpec::grad_axis(0), g, SampleLocation::Faces);
  CHECK(gx.inf_abs_helicity == 0.0);
  CHECK(gx.points.size() == 3 * g.size());

  // grid-scan oracle (numpy over the same centers): 0.13861716919909073
  const auto abc = sample_on_grid(FieldSpec::abc(1, 1, 1), torus(32));
  CHECK(abc.min_magnitude < 0.5);
  CHECK(abc.min_magnitude == doctest::Approx(0.13861716919909073).epsilon(1e-12));
}

TEST_CASE("sampling a field with a null throws with the point index") {
  GridConfig c;
  c.cells = {3, 3, 3};
  c.origin = Origin::Center;
  const FieldSpec f = FieldSpec::custom(expr::parse("x"), expr::parse("y"), expr::parse("z"));
  try {
    sample_on_grid(f, Grid(c));
    FAIL("expected NearNullField");
  } catch (const NearNullField& e) {
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 13);
  }
  CHECK_NOTHROW(sample_on_grid(f, Grid(c), SampleLocation::Cells, false));
}

TEST_CASE("tangency report") {
  GridConfig c;
  c.cells = {8, 8, 8};
  c.bc = {Boundary::Periodic, Boundary::Periodic, Boundary::Dirichlet0};
  const Grid zd(c);
  for (const auto& f : {FieldSpec::rotating_shear(1.0), FieldSpec::linear_shear()}) {
    const auto r = tangency_report(f, zd);
    REQUIRE(r.size() == 2);
    for (const auto& face : r) {
      CHECK(face.axis == 2);
      CHECK(face.max_normal_component == 0.0);
      CHECK(face.pass);
    }
  }
  c.bc = {Boundary::Dirichlet0, Boundary::Periodic, Boundary::Periodic};
  const auto r = tangency_report(FieldSpec::grad_axis(0), Grid(c));
  REQUIRE(r.size() == 2);
  CHECK(r[0].max_normal_component == 1.0);
  CHECK_FALSE(r[0].pass);
  CHECK(tangency_report(FieldSpec::grad_axis(0), torus(4)).empty());

  // rescaling the field does not change the report
  const FieldSpec scaled = FieldSpec::custom(expr::parse("(2+sin(x))*cos(z)"), expr::parse("(2+sin(x))*sin(z)"),
                                             expr::parse("(2+sin(x))*0.1*y"));
  const FieldSpec plain =
      FieldSpec::custom(expr::parse("cos(z)"), expr::parse("sin(z)"), expr::parse("0.1*y"));
  const Grid box = dirichlet_box(6);
  const auto a = tangency_report(scaled, box), b = tangency_report(plain, box);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i].max_normal_component == doctest::Approx(b[i].max_normal_component).epsilon(1e-14));
}

TEST_CASE("discrete calculus") {
  GridConfig c;
  c.cells = {16, 16, 16};
  c.bc = {Boundary::Periodic, Boundary::Periodic, Boundary::Dirichlet0};
  const Grid g(c);
  GridVector a(g);
  for (std::size_t i = 0; i < g.size(); ++i) a[i] = {0, 0, g.center(i).z};
  const GridScalar d = divergence(a);
  for (int k = 1; k < 15; ++k) CHECK(d[g.index(3, 5, k)] == doctest::Approx(1.0).epsilon(1e-12));

  const GridScalar one(torus(8), 1.0);
  for (const auto& v : gradient(one).values) CHECK(v == Vec3{});

  auto curl_err = [](int n) {
    const Grid t = torus(n);
    const GridVector w = sample_field(FieldSpec::rotating_shear(1.0), t);
    const GridVector cw = curl(w);
    double e = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) e = std::max(e, norm(cw[i] + w[i]));
    return e;
  };
  const double e16 = curl_err(16), e32 = curl_err(32);
  CHECK(e16 < 0.03);
  CHECK(e16 / e32 > 3.8);
}

TEST_CASE("discrete divergence telescopes on a torus") {
  std::mt19937_64 rng(29);
  const Grid g = torus(12, 1.0);
  std::normal_distribution<double> nd;
  GridVector f(g);
  for (auto& v : f.values) v = {nd(rng), nd(rng), nd(rng)};
  const GridScalar d = divergence(f);
  double s = 0.0, scale = 0.0;
  for (double v : d.values) {
    s += v;
    scale += std::abs(v);
  }
  CHECK(std::abs(s) <= 1e-12 * scale);
}

TEST_CASE("inner products") {
  const Grid g = torus(16);
  const auto ux = unit_at_cells(FieldSpec::grad_axis(0), g);
  GridScalar f(g);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::sin(g.center(i).x);
  const auto r = inner_products(f, f, ux);
  CHECK(r.perp == 0.0);
  CHECK(r.hperp == r.l2 + r.perp);

  const GridScalar one(g, 1.0);
  const auto o = inner_products(one, one, unit_at_cells(FieldSpec::rotating_shear(1.0), g));
  CHECK(o.l2 == doctest::Approx(g.volume()).epsilon(1e-14));
  CHECK(o.perp == 0.0);

  std::mt19937_64 rng(31);
  const auto ur = unit_at_cells(FieldSpec::abc(1, 0.7, 0.4), g);
  for (int t = 0; t < 10; ++t) {
    const GridScalar u = random_smooth(g, rng), v = random_smooth(g, rng);
    const auto uv = inner_products(u, v, ur), vu = inner_products(v, u, ur);
    CHECK(uv.perp == doctest::Approx(vu.perp).epsilon(1e-13));
    CHECK(inner_products(u, u, ur).perp >= 0.0);
    CHECK(uv.hperp == uv.l2 + uv.perp);
  }
}

TEST_CASE("OLAP files round-trip bit-exactly") {
  GridConfig c;
  c.cells = {3, 4, 5};
  c.extent = {1.0, 2.0, 0.5};
  const Grid g(c);
  std::mt19937_64 rng(37);
  std::normal_distribution<double> nd;
  GridScalar s(g);
  for (auto& v : s.values) v = nd(rng);
  std::stringstream ss;
  write_olap(ss, s);
  const std::string bytes = ss.str();
  CHECK(bytes.size() == 4 + 4 + 4 + 24 + 24 + 8 * g.size());
  CHECK(bytes.substr(0, 4) == "OLAP");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[12]) == 3);  // dims start after magic, version, kind
  const OlapFile f = read_olap(ss);
  CHECK(f.kind == 0);
  CHECK(f.dims == std::array<std::uint64_t, 3>{3, 4, 5});
  CHECK(f.extent == c.extent);
  CHECK(f.payload == s.values);

  GridVector v(g);
  for (auto& x : v.values) x = {nd(rng), nd(rng), nd(rng)};
  std::stringstream sv;
  write_olap(sv, v);
  const OlapFile fv = read_olap(sv);
  CHECK(fv.kind == 1);
  REQUIRE(fv.payload.size() == 3 * g.size());
  CHECK(fv.payload[3 * 7 + 2] == v[7].z);

  std::stringstream bad("OLAX");
  CHECK_THROWS(read_olap(bad));
}
