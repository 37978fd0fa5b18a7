#include "olap/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "olap/krylov.hpp"
#include "olap/parallel.hpp"
#include "olap/text.hpp"

namespace olap {

namespace {

std::string describe(const std::string& check, const Vec3& p, double v) {
  std::ostringstream os;
  os << "precondition violated: " << check << " (value " << v << " at " << p << ")";
  return os.str();
}

// 5 points per axis across the closed box.
std::vector<Vec3> coarse_probes(const Grid& g) {
  std::vector<Vec3> pts;
  const Vec3 lo = g.lower(), ext = g.config().extent;
  for (int k = 0; k < 5; ++k)
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 5; ++i)
        pts.push_back({lo.x + ext.x * i / 4.0, lo.y + ext.y * j / 4.0, lo.z + ext.z * k / 4.0});
  return pts;
}

Vec3 fd_gradient(const expr::Expression& f, const Vec3& p, double s) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 q = p, r = p;
    q[a] += s;
    r[a] -= s;
    g[a] = (f.evaluate(q) - f.evaluate(r)) / (2.0 * s);
  }
  return g;
}

std::function<double(const Vec3&)> fd_divergence(std::function<Vec3(const Vec3&)> f, double s) {
  return [f = std::move(f), s](const Vec3& p) {
    double d = 0.0;
    for (int a = 0; a < 3; ++a) {
      Vec3 q = p, r = p;
      q[a] += s;
      r[a] -= s;
      d += (f(q)[a] - f(r)[a]) / (2.0 * s);
    }
    return d;
  };
}

}  // namespace

PreconditionViolation::PreconditionViolation(std::string check, const Vec3& worst_point, double value)
    : std::runtime_error(describe(check, worst_point, value)),
      check_(std::move(check)),
      point_(worst_point),
      value_(value) {}

std::string to_string(APerpKind kind) {
  switch (kind) {
    case APerpKind::Example1: return "example1";
    case APerpKind::Clebsch: return "clebsch";
    case APerpKind::HelicityDiv: return "helicity_div";
    case APerpKind::Beltrami: return "beltrami";
  }
  return "unknown";
}

std::optional<APerpKind> aperp_kind_from_string(const std::string& name) {
  for (auto k : {APerpKind::Example1, APerpKind::Clebsch, APerpKind::HelicityDiv, APerpKind::Beltrami})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Integrable: return "integrable";
    case Classification::NonIntegrable: return "non_integrable";
    case Classification::Indeterminate: return "indeterminate";
  }
  return "unknown";
}

std::vector<Vec3> probe_points(const Grid& g) {
  std::vector<Vec3> pts;
  pts.reserve(g.size() + static_cast<std::size_t>(g.n(0) + 1) * (g.n(1) + 1) * (g.n(2) + 1));
  for (std::size_t i = 0; i < g.size(); ++i) pts.push_back(g.center(i));
  const Vec3 lo = g.lower();
  for (int k = 0; k <= g.n(2); ++k)
    for (int j = 0; j <= g.n(1); ++j)
      for (int i = 0; i <= g.n(0); ++i)
        pts.push_back({lo.x + i * g.spacing(0), lo.y + j * g.spacing(1), lo.z + k * g.spacing(2)});
  return pts;
}

APerpSpec build_aperp(APerpKind kind, const FieldSpec& field, const Grid& grid, const APerpInputs& in) {
  const double diag = norm(grid.config().extent);
  const double div_step = in.fd_step > 0.0 ? in.fd_step : 1e-4 * diag;
  const auto probes = coarse_probes(grid);
  auto require_max = [&](const std::string& check, auto quantity) {
    double worst = 0.0;
    Vec3 at;
    for (const auto& p : probes) {
      const double v = quantity(p);
      if (!(v <= worst)) {
        worst = v;
        at = p;
      }
    }
    if (!(worst <= in.tol)) throw PreconditionViolation(check, at, worst);
  };

  APerpSpec a;
  a.kind = kind;
  switch (kind) {
    case APerpKind::Example1: {
      if (grid.bc(2) == Boundary::Periodic)
        throw PreconditionViolation("example1 needs a non-periodic z axis", grid.lower(), 0.0);
      require_max("w must lie in span(grad x, grad y)", [&](const Vec3& p) {
        const Vec3 w = field.value(p);
        return std::abs(w.z) / std::max(norm(w), kDefaultWMin);
      });
      const double z0 = in.origin ? in.origin->z : 0.0;
      a.origin = {0.0, 0.0, z0};
      a.value = [z0](const Vec3& p) { return Vec3{0.0, 0.0, p.z - z0}; };
      a.divergence = [](const Vec3&) { return 1.0; };
      break;
    }
    case APerpKind::Clebsch: {
      std::optional<std::array<expr::Expression, 3>> pot;
      double step = in.fd_step > 0.0 ? in.fd_step : kDefaultFdStep * diag;
      if (const auto* c = std::get_if<fields::Clebsch>(&field.params())) {
        pot = std::array<expr::Expression, 3>{c->phi, c->psi, c->theta};
        step = field.fd_step();
      } else if (in.clebsch) {
        pot = in.clebsch;
        const auto& [phi, psi, theta] = *pot;
        double worst = 0.0;
        Vec3 at;
        for (const auto& p : probes) {
          const Vec3 w = field.value(p);
          const Vec3 rebuilt = fd_gradient(phi, p, step) + fd_gradient(theta, p, step) * psi.evaluate(p);
          const double e = norm(rebuilt - w) / std::max(norm(w), 1.0);
          if (e > worst) {
            worst = e;
            at = p;
          }
        }
        if (!(worst <= 1e-6)) throw PreconditionViolation("w must equal grad phi + psi grad theta", at, worst);
      } else {
        throw PreconditionViolation("clebsch construction needs potentials (phi, psi, theta)", grid.lower(), 0.0);
      }
      const auto [phi, psi, theta] = *pot;
      a.value = [=](const Vec3& p) {
        return cross(fd_gradient(theta, p, step), fd_gradient(phi, p, step)) * psi.evaluate(p);
      };
      a.divergence = [=](const Vec3& p) {
        return dot(fd_gradient(psi, p, step), cross(fd_gradient(theta, p, step), fd_gradient(phi, p, step)));
      };
      a.analytic_divergence = field.mode() == DerivativeMode::Analytic;
      break;
    }
    case APerpKind::HelicityDiv: {
      double worst = std::numeric_limits<double>::infinity();
      Vec3 at;
      for (const auto& p : probe_points(grid)) {
        const auto g = sample_geometry(field, p);
        const double v = g.unit_defined ? std::abs(g.normalized_helicity) : 0.0;
        if (v < worst) {
          worst = v;
          at = p;
        }
      }
      if (!(worst > in.tau_h)) throw PreconditionViolation("inf |h_hat| must be positive", at, worst);
      a.value = [field](const Vec3& p) {
        const auto g = sample_geometry(field, p);
        g.require_unit();
        const double hh = g.normalized_helicity;
        return cross(g.field_force - g.grad_normalized_helicity / hh, g.unit) / hh;
      };
      a.divergence = fd_divergence(a.value, div_step);
      a.analytic_divergence = false;
      break;
    }
    case APerpKind::Beltrami: {
      for (int ax = 0; ax < 3; ++ax)
        if (grid.bc(ax) == Boundary::Periodic)
          throw PreconditionViolation("beltrami construction needs a box without periodic axes", grid.lower(), 0.0);
      require_max("field force of the unit field must vanish", [&](const Vec3& p) {
        return norm(sample_geometry(field, p).field_force);
      });
      require_max("unit field must be divergence free", [&](const Vec3& p) {
        return std::abs(sample_geometry(field, p).div_unit);
      });
      const Vec3 x0 = in.origin.value_or(grid.center_of_box());
      a.origin = x0;
      a.nu_from_position = true;
      a.value = [field, x0](const Vec3& p) {
        const Vec3 u = field.value(p) / norm(field.value(p));
        const Vec3 r = (p - x0) * 0.5;
        return cross(u, cross(r, u));
      };
      a.divergence = [field, x0](const Vec3& p) {
        const auto g = sample_geometry(field, p);
        g.require_unit();
        const Vec3 r = p - x0;
        return 1.0 + 0.5 * dot(g.field_force, r) - 0.5 * g.div_unit * dot(g.unit, r);
      };
      break;
    }
  }

  for (const auto& p : probes) {
    const Vec3 v = a.value(p), w = field.value(p);
    const double s = norm(v) * norm(w);
    if (s > 0.0) a.orthogonality = std::max(a.orthogonality, std::abs(dot(v, w)) / s);
  }
  const double orth_tol = a.analytic_divergence ? 1e-8 : 1e-6;
  if (!(a.orthogonality <= orth_tol))
    throw PreconditionViolation("a_perp must be orthogonal to w", grid.lower(), a.orthogonality);
  return a;
}

ClassificationReport classify_field(const FieldSpec& field, const Grid& grid, double tau_h) {
  const GridSamples s = sample_on_grid(field, grid, SampleLocation::Cells, false);
  ClassificationReport r;
  r.inf_abs_h = s.inf_abs_helicity;
  r.sup_abs_h = s.sup_abs_helicity;
  r.min_w = s.min_magnitude;
  for (const auto& g : s.geometry) r.max_w = std::max(r.max_w, g.magnitude);
  r.near_null = r.min_w < 0.1 * r.max_w;
  if (r.sup_abs_h <= tau_h) r.classification = Classification::Integrable;
  else if (r.inf_abs_h >= tau_h) r.classification = Classification::NonIntegrable;
  else r.classification = Classification::Indeterminate;
  return r;
}

PoincareReport poincare_report(const FieldSpec& field, const APerpSpec& aperp, const Grid& grid, double tau_h) {
  const auto pts = probe_points(grid);
  struct Probe {
    double div, a, w, h, hhat, r;
  };
  std::vector<Probe> v(pts.size());
  par::for_each(pts.size(), [&](std::size_t i) {
    const auto g = sample_geometry(field, pts[i]);
    Probe& q = v[i];
    q.w = g.magnitude;
    q.h = std::abs(g.helicity);
    q.hhat = g.unit_defined ? std::abs(g.normalized_helicity) : 0.0;
    if (g.unit_defined) {
      q.div = std::abs(aperp.divergence(pts[i]));
      q.a = norm(aperp.value(pts[i]));
    } else {
      q.div = 0.0;
      q.a = std::numeric_limits<double>::infinity();
    }
    q.r = 0.5 * norm(pts[i] - aperp.origin);
  });

  PoincareReport r;
  r.field = field.name();
  r.aperp = aperp.kind;
  r.probes = pts.size();
  r.orthogonality = aperp.orthogonality;
  const double inf = std::numeric_limits<double>::infinity();
  r.epsilon.value = r.inf_h.value = r.inf_hhat.value = r.min_w.value = inf;
  r.nu.value = r.sup_aperp.value = r.m.value = -inf;
  auto lower = [](Extremum& e, double x, const Vec3& p) {
    if (x < e.value) e = {x, p};
  };
  auto upper = [](Extremum& e, double x, const Vec3& p) {
    if (x > e.value) e = {x, p};
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Probe& q = v[i];
    lower(r.epsilon, q.div, pts[i]);
    upper(r.sup_aperp, q.a, pts[i]);
    upper(r.nu, aperp.nu_from_position ? q.r : q.a, pts[i]);
    upper(r.m, q.w, pts[i]);
    lower(r.inf_h, q.h, pts[i]);
    lower(r.inf_hhat, q.hhat, pts[i]);
    lower(r.min_w, q.w, pts[i]);
  }
  r.c_corollary = r.nu.value > 0.0 ? r.epsilon.value / (2.0 * r.nu.value) : 0.0;
  r.c_theorem = r.nu.value > 0.0 && r.m.value > 0.0 ? r.inf_h.value / (2.0 * r.m.value * r.m.value * r.nu.value) : 0.0;
  r.classification = classify_field(field, grid, tau_h);

  if (!(r.epsilon.value > 0.0)) r.notes.push_back("epsilon = 0: no Poincare constant is certified");
  if (!std::isfinite(r.nu.value)) r.notes.push_back("a_perp undefined at a near-null point: nu is unbounded");
  if (r.inf_h.value < tau_h && r.epsilon.value > 0.0)
    r.notes.push_back("helicity vanishes somewhere yet the a_perp construction still certifies a bound; "
                      "nonvanishing helicity is not necessary");
  if (r.classification.near_null) r.notes.push_back("min |w| is small compared with max |w|");
  if (aperp.nu_from_position) r.notes.push_back("nu is the position bound sup |x - origin| / 2");
  return r;
}

namespace {

std::string point_text(const Vec3& p) {
  return format_double(p.x) + " " + format_double(p.y) + " " + format_double(p.z);
}

}  // namespace

void write_key_values(std::ostream& os, const PoincareReport& r) {
  auto ext = [&](const char* key, const Extremum& e) {
    os << key << " = " << format_double(e.value) << '\n' << key << "_at = " << point_text(e.at) << '\n';
  };
  os << "field = " << r.field << '\n';
  os << "aperp = " << to_string(r.aperp) << '\n';
  os << "probes = " << r.probes << '\n';
  ext("epsilon", r.epsilon);
  ext("nu", r.nu);
  ext("sup_aperp", r.sup_aperp);
  ext("M", r.m);
  ext("inf_h", r.inf_h);
  ext("inf_hhat", r.inf_hhat);
  ext("min_w", r.min_w);
  os << "orthogonality = " << format_double(r.orthogonality) << '\n';
  os << "C_corollary = " << format_double(r.c_corollary) << '\n';
  os << "C_theorem = " << format_double(r.c_theorem) << '\n';
  os << "classification = " << to_string(r.classification.classification) << '\n';
  os << "near_null = " << (r.classification.near_null ? "true" : "false") << '\n';
  for (std::size_t i = 0; i < r.notes.size(); ++i) os << "note_" << i << " = " << r.notes[i] << '\n';
}

void write_csv(std::ostream& os, const PoincareReport& r) {
  os << "quantity,value,x,y,z\n";
  auto row = [&](const char* key, const Extremum& e) {
    os << key << ',' << format_double(e.value) << ',' << format_double(e.at.x) << ',' << format_double(e.at.y)
       << ',' << format_double(e.at.z) << '\n';
  };
  row("epsilon", r.epsilon);
  row("nu", r.nu);
  row("sup_aperp", r.sup_aperp);
  row("M", r.m);
  row("inf_h", r.inf_h);
  row("inf_hhat", r.inf_hhat);
  row("min_w", r.min_w);
  os << "C_corollary," << format_double(r.c_corollary) << ",,,\n";
  os << "C_theorem," << format_double(r.c_theorem) << ",,,\n";
}

BoundCheck check_bound(double lambda_min, double c, double slack) {
  BoundCheck b;
  b.c_squared = c * c;
  b.threshold = b.c_squared * (1.0 - slack);
  b.margin = b.c_squared > 0.0 ? lambda_min / b.c_squared : std::numeric_limits<double>::infinity();
  b.pass = lambda_min >= b.threshold;
  return b;
}

BoundVerification verify_bound(const PoincareReport& report, const CsrMatrix& K, double slack) {
  BoundVerification v;
  const SpectrumReport s = smallest_eigs(K, 1);
  v.lambda_min = s.eigenvalues.empty() ? 0.0 : s.eigenvalues.front();
  v.lambda_residual = s.residuals.empty() ? 0.0 : s.residuals.front();
  v.eigen_converged = s.all_converged();
  v.corollary = check_bound(v.lambda_min, report.c_corollary, slack);
  v.theorem = check_bound(v.lambda_min, report.c_theorem, slack);
  v.pass = v.eigen_converged && v.corollary.pass && v.theorem.pass;
  return v;
}

}  // namespace olap
