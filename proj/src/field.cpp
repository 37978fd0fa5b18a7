#include "olap/field.hpp"

#include <cmath>
#include <sstream>

namespace olap {

NearNullField::NearNullField(const Vec3& point, double magnitude, std::optional<std::size_t> index)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "near-null field: |w| = " << magnitude << " at " << point;
        if (index) os << " (point index " << *index << ")";
        return os.str();
      }()),
      point_(point),
      magnitude_(magnitude),
      index_(index) {}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Central-difference derivatives of a scalar expression.
struct ScalarDerivs {
  double value = 0.0;
  Vec3 grad;
  Mat3 hess;
  std::array<Mat3, 3> third{};  // third[i][j][k]
};

ScalarDerivs fd_derivatives(const expr::Expression& f, const Vec3& p, double step, int order) {
  auto at = [&](double a, int i, double b = 0.0, int j = 0, double c = 0.0, int k = 0) {
    Vec3 q = p;
    q[i] += a;
    q[j] += b;
    q[k] += c;
    return f.evaluate(q);
  };
  ScalarDerivs d;
  d.value = f.evaluate(p);
  const double s1 = step;
  for (int i = 0; i < 3; ++i) d.grad[i] = (at(s1, i) - at(-s1, i)) / (2.0 * s1);
  if (order < 2) return d;

  const double s2 = 10.0 * step;
  for (int i = 0; i < 3; ++i) {
    d.hess[i][i] = (at(s2, i) - 2.0 * d.value + at(-s2, i)) / (s2 * s2);
    for (int j = i + 1; j < 3; ++j) {
      const double v = (at(s2, i, s2, j) - at(s2, i, -s2, j) - at(-s2, i, s2, j) +
                        at(-s2, i, -s2, j)) / (4.0 * s2 * s2);
      d.hess[i][j] = d.hess[j][i] = v;
    }
  }
  if (order < 3) return d;

  const double s3 = 100.0 * step;
  const double s33 = s3 * s3 * s3;
  auto set = [&](int i, int j, int k, double v) {
    const int idx[3] = {i, j, k};
    // all permutations
    const int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const auto& pm : perm) d.third[idx[pm[0]]][idx[pm[1]]][idx[pm[2]]] = v;
  };
  for (int i = 0; i < 3; ++i) {
    set(i, i, i, (at(2 * s3, i) - 2.0 * at(s3, i) + 2.0 * at(-s3, i) - at(-2 * s3, i)) / (2.0 * s33));
    for (int j = 0; j < 3; ++j) {
      if (j == i) continue;
      // d^3 f / dx_i^2 dx_j
      const double plus = at(s3, i, s3, j) - 2.0 * at(s3, j) + at(-s3, i, s3, j);
      const double minus = at(s3, i, -s3, j) - 2.0 * at(-s3, j) + at(-s3, i, -s3, j);
      set(i, i, j, (plus - minus) / (2.0 * s33));
    }
  }
  double mixed = 0.0;
  for (int a = -1; a <= 1; a += 2)
    for (int b = -1; b <= 1; b += 2)
      for (int c = -1; c <= 1; c += 2) mixed += a * b * c * at(a * s3, 0, b * s3, 1, c * s3, 2);
  set(0, 1, 2, mixed / (8.0 * s33));
  return d;
}

FieldJet analytic_jet(const FieldParams& params, const Vec3& p) {
  FieldJet j;
  std::visit(Overloaded{
                 [&](const fields::GradAxis& g) { j.w = unit_vector(g.axis); },
                 [&](const fields::LinearShear&) {
                   j.w = {1.0, p.z, 0.0};
                   j.jacobian[1][2] = 1.0;
                 },
                 [&](const fields::RotatingShear& r) {
                   const double c = std::cos(r.alpha * p.z), s = std::sin(r.alpha * p.z);
                   j.w = {c, s, 0.0};
                   j.jacobian[0][2] = -r.alpha * s;
                   j.jacobian[1][2] = r.alpha * c;
                   j.hessian[0][2][2] = -r.alpha * r.alpha * c;
                   j.hessian[1][2][2] = -r.alpha * r.alpha * s;
                 },
                 [&](const fields::Abc& f) {
                   const double sx = std::sin(p.x), cx = std::cos(p.x);
                   const double sy = std::sin(p.y), cy = std::cos(p.y);
                   const double sz = std::sin(p.z), cz = std::cos(p.z);
                   j.w = {f.a * sz + f.c * cy, f.b * sx + f.a * cz, f.c * sy + f.b * cx};
                   j.jacobian[0][1] = -f.c * sy;
                   j.jacobian[0][2] = f.a * cz;
                   j.jacobian[1][0] = f.b * cx;
                   j.jacobian[1][2] = -f.a * sz;
                   j.jacobian[2][0] = -f.b * sx;
                   j.jacobian[2][1] = f.c * cy;
                   j.hessian[0][1][1] = -f.c * cy;
                   j.hessian[0][2][2] = -f.a * sz;
                   j.hessian[1][0][0] = -f.b * sx;
                   j.hessian[1][2][2] = -f.a * cz;
                   j.hessian[2][0][0] = -f.b * cx;
                   j.hessian[2][1][1] = -f.c * sy;
                 },
                 [](const auto&) {},
             },
             params);
  return j;
}

FieldJet fd_jet(const FieldParams& params, const Vec3& p, double step, int order) {
  FieldJet j;
  if (const auto* c = std::get_if<fields::Custom>(&params)) {
    const expr::Expression* comp[3] = {&c->wx, &c->wy, &c->wz};
    for (int i = 0; i < 3; ++i) {
      const ScalarDerivs d = fd_derivatives(*comp[i], p, step, order);
      j.w[i] = d.value;
      for (int a = 0; a < 3; ++a) j.jacobian[i][a] = d.grad[a];
      if (order >= 2) j.hessian[i] = d.hess;
    }
    return j;
  }
  const auto& c = std::get<fields::Clebsch>(params);
  const ScalarDerivs phi = fd_derivatives(c.phi, p, step, order + 1);
  const ScalarDerivs psi = fd_derivatives(c.psi, p, step, order);
  const ScalarDerivs th = fd_derivatives(c.theta, p, step, order + 1);
  j.w = phi.grad + psi.value * th.grad;
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a)
      j.jacobian[i][a] = phi.hess[i][a] + psi.grad[a] * th.grad[i] + psi.value * th.hess[i][a];
  if (order >= 2) {
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          j.hessian[i][a][b] = phi.third[i][a][b] + psi.hess[a][b] * th.grad[i] +
                               psi.grad[a] * th.hess[i][b] + psi.grad[b] * th.hess[i][a] +
                               psi.value * th.third[i][a][b];
  }
  return j;
}

}  // namespace

FieldSpec FieldSpec::grad_axis(int axis) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("grad_axis: axis must be 0, 1 or 2");
  return FieldSpec(fields::GradAxis{axis}, kDefaultFdStep);
}
FieldSpec FieldSpec::linear_shear() { return FieldSpec(fields::LinearShear{}, kDefaultFdStep); }
FieldSpec FieldSpec::rotating_shear(double alpha) {
  return FieldSpec(fields::RotatingShear{alpha}, kDefaultFdStep);
}
FieldSpec FieldSpec::abc(double a, double b, double c) {
  return FieldSpec(fields::Abc{a, b, c}, kDefaultFdStep);
}
FieldSpec FieldSpec::clebsch(expr::Expression phi, expr::Expression psi, expr::Expression theta,
                             double fd_step) {
  return FieldSpec(fields::Clebsch{std::move(phi), std::move(psi), std::move(theta)}, fd_step);
}
FieldSpec FieldSpec::custom(expr::Expression wx, expr::Expression wy, expr::Expression wz,
                            double fd_step) {
  return FieldSpec(fields::Custom{std::move(wx), std::move(wy), std::move(wz)}, fd_step);
}

FieldSpec FieldSpec::with_fd_step(double step) const {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  FieldSpec copy = *this;
  copy.fd_step_ = step;
  return copy;
}

DerivativeMode FieldSpec::mode() const {
  return std::holds_alternative<fields::Clebsch>(params_) ||
                 std::holds_alternative<fields::Custom>(params_)
             ? DerivativeMode::FiniteDifference
             : DerivativeMode::Analytic;
}

Vec3 FieldSpec::value(const Vec3& p) const {
  if (const auto* c = std::get_if<fields::Custom>(&params_))
    return {c->wx.evaluate(p), c->wy.evaluate(p), c->wz.evaluate(p)};
  if (std::holds_alternative<fields::Clebsch>(params_)) return fd_jet(params_, p, fd_step_, 0).w;
  return analytic_jet(params_, p).w;
}

FieldJet FieldSpec::jet(const Vec3& p, int order) const {
  if (mode() == DerivativeMode::Analytic) return analytic_jet(params_, p);
  return fd_jet(params_, p, fd_step_, order);
}

std::string FieldSpec::name() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const fields::GradAxis& g) { os << "grad_axis(" << "xyz"[g.axis] << ")"; },
                 [&](const fields::LinearShear&) { os << "linear_shear"; },
                 [&](const fields::RotatingShear& r) { os << "rotating_shear(" << r.alpha << ")"; },
                 [&](const fields::Abc& f) { os << "abc(" << f.a << "," << f.b << "," << f.c << ")"; },
                 [&](const fields::Clebsch& c) {
                   os << "clebsch(" << c.phi.to_string() << "; " << c.psi.to_string() << "; "
                      << c.theta.to_string() << ")";
                 },
                 [&](const fields::Custom& c) {
                   os << "custom(" << c.wx.to_string() << "; " << c.wy.to_string() << "; "
                      << c.wz.to_string() << ")";
                 },
             },
             params_);
  return os.str();
}

Vec3 curl_of(const Mat3& j) {
  return {j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]};
}

void GeometrySample::require_unit() const {
  if (!unit_defined) throw NearNullField(point, magnitude);
}

GeometrySample geometry_from_jet(const Vec3& point, const FieldJet& jet, double w_min) {
  GeometrySample g;
  g.point = point;
  g.w = jet.w;
  g.magnitude = norm(jet.w);
  g.jacobian = jet.jacobian;
  g.curl = curl_of(jet.jacobian);
  g.helicity = dot(jet.w, g.curl);
  const Mat3& J = jet.jacobian;
  const Hess3& H = jet.hessian;
  for (int j = 0; j < 3; ++j) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += J[i][j] * jet.w[i];
    g.grad_w2[j] = 2.0 * s;
  }
  if (!(g.magnitude >= w_min)) return g;

  g.unit_defined = true;
  const double n = g.magnitude;
  const Vec3 u = jet.w / n;
  g.unit = u;

  // derivatives of |w|
  Vec3 dn;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) dn[j] += u[k] * J[k][j];
  Mat3 W;  // W[i][j] = d u_i / dx_j
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) W[i][j] = (J[i][j] - u[i] * dn[j]) / n;
  Mat3 ddn;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (int m = 0; m < 3; ++m) s += W[m][k] * J[m][j] + u[m] * H[m][j][k];
      ddn[j][k] = s;
    }
  Hess3 dW;  // dW[i][j][k] = d^2 u_i / dx_j dx_k
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        dW[i][j][k] = (H[i][j][k] - W[i][k] * dn[j] - u[i] * ddn[j][k] - W[i][j] * dn[k]) / n;

  g.unit_jacobian = W;
  g.unit_curl = curl_of(W);
  g.normalized_helicity = dot(u, g.unit_curl);
  g.div_unit = W.trace();
  g.field_force = cross(u, g.unit_curl);

  // dcurl[i][k] = d (curl u)_k / dx_i
  Mat3 dcurl;
  for (int i = 0; i < 3; ++i) {
    dcurl[i][0] = dW[2][1][i] - dW[1][2][i];
    dcurl[i][1] = dW[0][2][i] - dW[2][0][i];
    dcurl[i][2] = dW[1][0][i] - dW[0][1][i];
  }
  // div(u x c) = c . curl(u) - u . curl(c)
  const Vec3 curl_c{dcurl[1][2] - dcurl[2][1], dcurl[2][0] - dcurl[0][2], dcurl[0][1] - dcurl[1][0]};
  g.field_charge = dot(g.unit_curl, g.unit_curl) - dot(u, curl_c);
  for (int m = 0; m < 3; ++m) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += W[j][m] * g.unit_curl[j] + u[j] * dcurl[m][j];
    g.grad_normalized_helicity[m] = s;
  }

  // perp-Laplacian of w^2: P : Hess(w^2) + (div P) . grad(w^2), div P = b - (div u) u
  Mat3 hw2;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += J[i][j] * J[i][k] + jet.w[i] * H[i][j][k];
      hw2[j][k] = 2.0 * s;
    }
  const Mat3 P = perp_projector(u);
  double contraction = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) contraction += P[j][k] * hw2[j][k];
  const Vec3 divP = g.field_force - g.div_unit * u;
  g.lap_perp_w2 = contraction + dot(divP, g.grad_w2);
  return g;
}

GeometrySample sample_geometry(const FieldSpec& spec, const Vec3& point, double w_min) {
  return geometry_from_jet(point, spec.jet(point, 2), w_min);
}

std::pair<Vec3, Vec3> decompose_gradient(const GeometrySample& sample, const Vec3& g) {
  sample.require_unit();
  const Vec3 par = sample.unit * dot(sample.unit, g);
  return {g - par, par};
}

}  // namespace olap
