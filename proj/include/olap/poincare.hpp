#pragma once

// Explicit auxiliary fields a_perp (orthogonal to w, divergence bounded away
// from zero), the Poincare constants they certify, helicity classification
// and the spectral check lambda_min(K) >= C^2.

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "olap/field.hpp"
#include "olap/grid.hpp"
#include "olap/sparse.hpp"

namespace olap {

class PreconditionViolation : public std::runtime_error {
 public:
  PreconditionViolation(std::string check, const Vec3& worst_point, double value);
  const std::string& check() const { return check_; }
  const Vec3& worst_point() const { return point_; }
  double value() const { return value_; }

 private:
  std::string check_;
  Vec3 point_;
  double value_;
};

enum class APerpKind { Example1, Clebsch, HelicityDiv, Beltrami };

std::string to_string(APerpKind kind);
std::optional<APerpKind> aperp_kind_from_string(const std::string& name);

struct APerpInputs {
  /// Reference point for position-based constructions (example1 uses z - origin.z,
  /// beltrami uses x - origin). Defaults: the coordinate origin for example1,
  /// the box center for beltrami.
  std::optional<Vec3> origin;
  /// (phi, psi, theta) for the clebsch construction when the field itself is
  /// not given in Clebsch form.
  std::optional<std::array<expr::Expression, 3>> clebsch;
  /// Finite-difference step for divergences and potential gradients;
  /// non-positive means 1e-4 times the domain diagonal.
  double fd_step = 0.0;
  /// Tolerance for the structural checks (w_z = 0, Beltrami, Clebsch match).
  double tol = 1e-8;
  double tau_h = 1e-8;
};

struct APerpSpec {
  APerpKind kind = APerpKind::Example1;
  std::function<Vec3(const Vec3&)> value;
  std::function<double(const Vec3&)> divergence;
  bool analytic_divergence = true;
  Vec3 origin;
  /// max |a.w| / (|a||w|) over the construction probe set.
  double orthogonality = 0.0;
  /// Beltrami only: nu is taken as sup |x - origin| / 2, the bound used by
  /// the construction, instead of the sampled sup |a|.
  bool nu_from_position = false;
};

APerpSpec build_aperp(APerpKind kind, const FieldSpec& field, const Grid& grid, const APerpInputs& inputs = {});

/// Cell centers together with all cell vertices, i.e. the closed box.
std::vector<Vec3> probe_points(const Grid& grid);

enum class Classification { Integrable, NonIntegrable, Indeterminate };
std::string to_string(Classification c);

inline constexpr double kDefaultTauH = 1e-8;

struct ClassificationReport {
  Classification classification = Classification::Indeterminate;
  double inf_abs_h = 0.0;
  double sup_abs_h = 0.0;
  double min_w = 0.0;
  double max_w = 0.0;
  /// min|w| is below a tenth of max|w|: the non-vanishing assumption is fragile.
  bool near_null = false;
};

/// Classifies by |h| at the cell centers.
ClassificationReport classify_field(const FieldSpec& field, const Grid& grid, double tau_h = kDefaultTauH);

struct Extremum {
  double value = 0.0;
  Vec3 at;
};

struct PoincareReport {
  std::string field;
  APerpKind aperp = APerpKind::Example1;
  std::size_t probes = 0;
  Extremum epsilon;     // inf |div a|
  Extremum nu;          // sup |a| (position bound for beltrami)
  Extremum sup_aperp;   // sampled sup |a|
  Extremum m;           // sup |w|
  Extremum inf_h;       // inf |h|
  Extremum inf_hhat;    // inf |h_hat|
  Extremum min_w;       // inf |w|
  double orthogonality = 0.0;
  double c_corollary = 0.0;  // epsilon / (2 nu)
  double c_theorem = 0.0;    // inf|h| / (2 M^2 nu)
  ClassificationReport classification;
  std::vector<std::string> notes;
};

PoincareReport poincare_report(const FieldSpec& field, const APerpSpec& aperp, const Grid& grid,
                               double tau_h = kDefaultTauH);

void write_key_values(std::ostream& os, const PoincareReport& r);
void write_csv(std::ostream& os, const PoincareReport& r);

struct BoundCheck {
  double c_squared = 0.0;
  double threshold = 0.0;  // c_squared * (1 - slack)
  double margin = 0.0;     // lambda_min / c_squared (infinite when c_squared = 0)
  bool pass = false;
};

struct BoundVerification {
  double lambda_min = 0.0;
  double lambda_residual = 0.0;
  bool eigen_converged = false;
  BoundCheck corollary;
  BoundCheck theorem;
  bool pass = false;  // both constants satisfied
};

inline constexpr double kDefaultSlack = 0.1;

BoundCheck check_bound(double lambda_min, double c, double slack = kDefaultSlack);
/// K is the assembled -Laplacian_perp on the grid the report was sampled on.
BoundVerification verify_bound(const PoincareReport& report, const CsrMatrix& K, double slack = kDefaultSlack);

}  // namespace olap
