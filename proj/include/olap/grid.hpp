#pragma once

// Structured cell-centered 3D grid over a box, sampled arrays, discrete
// calculus for diagnostics and the discrete L2 / orthogonal-gradient forms.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "olap/expr.hpp"
#include "olap/field.hpp"
#include "olap/vec3.hpp"

namespace olap {

class InvalidConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Boundary { Periodic, Dirichlet0 };
enum class Origin { Corner, Center };

struct GridConfig {
  std::array<int, 3> cells{16, 16, 16};
  Vec3 extent{1.0, 1.0, 1.0};
  Origin origin = Origin::Corner;
  std::array<Boundary, 3> bc{Boundary::Periodic, Boundary::Periodic, Boundary::Periodic};
};

/// Ghost rule on non-periodic axes: odd reflection (u = 0 on the face) or
/// even reflection (zero normal derivative).
enum class Ghost { Odd, Even };

/// Index of a neighbor after applying boundary rules, with the reflection sign.
struct MappedCell {
  std::size_t index;
  double sign;
};

class Grid {
 public:
  explicit Grid(const GridConfig& config);

  const GridConfig& config() const { return config_; }
  int n(int axis) const { return config_.cells[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double extent(int axis) const { return config_.extent[axis]; }
  Boundary bc(int axis) const { return config_.bc[axis]; }
  const Vec3& lower() const { return lower_; }
  Vec3 upper() const;
  Vec3 center_of_box() const;
  std::size_t size() const { return size_; }
  double cell_volume() const { return spacing_[0] * spacing_[1] * spacing_[2]; }
  double volume() const { return config_.extent.x * config_.extent.y * config_.extent.z; }
  double min_spacing() const;
  bool fully_periodic() const;
  bool has_dirichlet() const;

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(config_.cells[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(config_.cells[1]) * static_cast<std::size_t>(k));
  }
  std::array<int, 3> coords(std::size_t index) const;

  /// Center of cell (i,j,k); indices outside the grid give ghost-cell positions.
  Vec3 center(int i, int j, int k) const;
  Vec3 center(std::size_t index) const;

  /// Maps possibly out-of-range cell coordinates (at most one layer outside
  /// along non-periodic axes) to a stored cell and reflection sign.
  MappedCell map(int i, int j, int k, Ghost ghost = Ghost::Odd) const;

  /// Faces normal to `axis`: low face of cell (i,j,k), with i_axis in
  /// [0, n] for Dirichlet axes and [0, n) for periodic axes.
  int face_count_along(int axis) const;
  Vec3 face_center(int axis, int i, int j, int k) const;

  bool operator==(const Grid& other) const;

 private:
  GridConfig config_;
  std::array<double, 3> spacing_{};
  Vec3 lower_;
  std::size_t size_ = 0;
};

Grid build_grid(const GridConfig& config);

struct GridScalar {
  Grid grid;
  std::vector<double> values;

  explicit GridScalar(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

struct GridVector {
  Grid grid;
  std::vector<Vec3> values;

  explicit GridVector(const Grid& g) : grid(g), values(g.size()) {}
  Vec3& operator[](std::size_t i) { return values[i]; }
  const Vec3& operator[](std::size_t i) const { return values[i]; }
};

GridScalar sample_expression(const expr::Expression& e, const Grid& grid);

enum class SampleLocation { Cells, Faces };

struct GridSamples {
  SampleLocation where = SampleLocation::Cells;
  std::vector<Vec3> points;
  std::vector<GeometrySample> geometry;
  double min_magnitude = 0.0;
  std::size_t min_magnitude_at = 0;
  double inf_abs_helicity = 0.0;
  std::size_t inf_abs_helicity_at = 0;
  double sup_abs_helicity = 0.0;
};

/// Geometry at cell centers, or at the faces of all three families (x, y, z
/// in that order). Throws NearNullField with the point index when
/// require_nonvanishing and |w| < w_min somewhere.
GridSamples sample_on_grid(const FieldSpec& spec, const Grid& grid,
                           SampleLocation where = SampleLocation::Cells,
                           bool require_nonvanishing = true, double w_min = kDefaultWMin);

GridVector sample_field(const FieldSpec& spec, const Grid& grid);

/// Field values at cell centers including one ghost layer, stored on the
/// (n+2)^3 extended lattice. Ghosts along Dirichlet axes are evaluated at the
/// ghost-cell centers; periodic ghosts copy the wrapped cell.
struct ExtendedCellField {
  std::array<int, 3> dims{};
  std::vector<Vec3> w;
  double min_magnitude = 0.0;
  const Vec3& at(int i, int j, int k) const { return w[offset(i, j, k)]; }
  std::size_t offset(int i, int j, int k) const {
    return static_cast<std::size_t>(i + 1) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j + 1) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k + 1));
  }
};
ExtendedCellField sample_cells_extended(const FieldSpec& spec, const Grid& grid);

inline constexpr double kDefaultTangencyTol = 1e-10;

struct FaceTangency {
  int axis = 0;
  bool upper = false;
  double max_normal_component = 0.0;  // max |n . w_hat|
  Vec3 worst_point;
  std::size_t undefined_points = 0;   // face points with |w| < w_min
  bool pass = true;
};

std::vector<FaceTangency> tangency_report(const FieldSpec& spec, const Grid& grid,
                                          double tol = kDefaultTangencyTol);

// Second-order central differences with boundary-aware ghosts.
GridVector gradient(const GridScalar& u);
GridScalar divergence(const GridVector& v);
GridVector curl(const GridVector& v);

struct InnerProducts {
  double l2 = 0.0;
  double perp = 0.0;
  double hperp = 0.0;
};

/// Midpoint-rule forms: l2 = sum u v dV, perp = sum (P grad u).(P grad v) dV
/// with P = I - w_hat w_hat^T at cell centers, hperp = l2 + perp.
InnerProducts inner_products(const GridScalar& u, const GridScalar& v,
                             const std::vector<Vec3>& unit_at_cells);
std::vector<Vec3> unit_at_cells(const FieldSpec& spec, const Grid& grid, double w_min = kDefaultWMin);

// OLAP binary format: "OLAP", u32 version, u32 kind (0 scalar, 1 vector),
// 3 x u64 dims, 3 x f64 extent, then little-endian f64 payload in x-fastest
// cell order (vectors interleaved per cell).
inline constexpr std::uint32_t kOlapVersion = 1;

void write_olap(std::ostream& os, const GridScalar& s);
void write_olap(std::ostream& os, const GridVector& v);
void write_olap(const std::string& path, const GridScalar& s);
void write_olap(const std::string& path, const GridVector& v);

struct OlapFile {
  std::uint32_t kind = 0;
  std::array<std::uint64_t, 3> dims{};
  Vec3 extent;
  std::vector<double> payload;
};
OlapFile read_olap(std::istream& is);
OlapFile read_olap(const std::string& path);

namespace le {
void put_u32(std::ostream& os, std::uint32_t v);
void put_u64(std::ostream& os, std::uint64_t v);
void put_f64(std::ostream& os, double v);
std::uint32_t get_u32(std::istream& is);
std::uint64_t get_u64(std::istream& is);
double get_f64(std::istream& is);
}  // namespace le

}  // namespace olap
