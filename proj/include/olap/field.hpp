#pragma once

// Analytic constraining vector fields and the pointwise geometry derived from
// them: unit direction, curl, helicity, normalized helicity, divergence of the
// unit field, field force and field charge.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

#include "olap/expr.hpp"
#include "olap/vec3.hpp"

namespace olap {

/// Below this magnitude the field is treated as vanishing at a point.
inline constexpr double kDefaultWMin = 1e-8;
/// Default central-difference step for expression-defined fields (unit-size domains).
inline constexpr double kDefaultFdStep = 1e-5;

class NearNullField : public std::runtime_error {
 public:
  NearNullField(const Vec3& point, double magnitude, std::optional<std::size_t> index = {});
  const Vec3& point() const { return point_; }
  double magnitude() const { return magnitude_; }
  std::optional<std::size_t> index() const { return index_; }

 private:
  Vec3 point_;
  double magnitude_;
  std::optional<std::size_t> index_;
};

namespace fields {
struct GradAxis { int axis = 0; };
struct LinearShear {};
struct RotatingShear { double alpha = 1.0; };
struct Abc { double a = 1.0, b = 1.0, c = 1.0; };
struct Clebsch { expr::Expression phi, psi, theta; };
struct Custom { expr::Expression wx, wy, wz; };
}  // namespace fields

using FieldParams = std::variant<fields::GradAxis, fields::LinearShear, fields::RotatingShear,
                                 fields::Abc, fields::Clebsch, fields::Custom>;

enum class DerivativeMode { Analytic, FiniteDifference };

/// Value, Jacobian and (optionally) second derivatives of w at a point.
struct FieldJet {
  Vec3 w;
  Mat3 jacobian;
  Hess3 hessian{};
};

class FieldSpec {
 public:
  static FieldSpec grad_axis(int axis);
  static FieldSpec linear_shear();
  static FieldSpec rotating_shear(double alpha);
  static FieldSpec abc(double a, double b, double c);
  static FieldSpec clebsch(expr::Expression phi, expr::Expression psi, expr::Expression theta,
                           double fd_step = kDefaultFdStep);
  static FieldSpec custom(expr::Expression wx, expr::Expression wy, expr::Expression wz,
                          double fd_step = kDefaultFdStep);

  const FieldParams& params() const { return params_; }
  DerivativeMode mode() const;
  /// First-derivative step; second and third derivatives use 10x and 100x this.
  double fd_step() const { return fd_step_; }
  FieldSpec with_fd_step(double step) const;

  Vec3 value(const Vec3& p) const;
  /// order 1: value + Jacobian; order 2: also second derivatives.
  FieldJet jet(const Vec3& p, int order = 2) const;

  std::string name() const;

 private:
  FieldSpec(FieldParams params, double fd_step) : params_(std::move(params)), fd_step_(fd_step) {}
  FieldParams params_;
  double fd_step_;
};

struct GeometrySample {
  Vec3 point;
  Vec3 w;
  double magnitude = 0.0;
  Mat3 jacobian;
  Vec3 curl;
  double helicity = 0.0;

  // Quantities of the unit field; meaningful only when unit_defined.
  bool unit_defined = false;
  Vec3 unit;
  Mat3 unit_jacobian;
  Vec3 unit_curl;
  double normalized_helicity = 0.0;
  double div_unit = 0.0;
  Vec3 field_force;
  double field_charge = 0.0;
  Vec3 grad_normalized_helicity;
  Vec3 grad_w2;
  double lap_perp_w2 = 0.0;

  /// Throws NearNullField when the unit field is undefined here.
  void require_unit() const;
};

/// Derived geometry from a jet with second derivatives.
GeometrySample geometry_from_jet(const Vec3& point, const FieldJet& jet, double w_min = kDefaultWMin);

GeometrySample sample_geometry(const FieldSpec& spec, const Vec3& point, double w_min = kDefaultWMin);

/// Splits g into components orthogonal and parallel to w at the sample.
std::pair<Vec3, Vec3> decompose_gradient(const GeometrySample& sample, const Vec3& g);

Vec3 curl_of(const Mat3& jacobian);

}  // namespace olap
