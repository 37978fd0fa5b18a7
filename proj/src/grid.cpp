#include "olap/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

#include "olap/parallel.hpp"

namespace olap {

Grid::Grid(const GridConfig& config) : config_(config) {
  for (int a = 0; a < 3; ++a) {
    if (config.cells[a] <= 0) throw InvalidConfig("cell counts must be positive");
    if (!(config.extent[a] > 0.0) || !std::isfinite(config.extent[a]))
      throw InvalidConfig("extents must be positive and finite");
    spacing_[a] = config.extent[a] / config.cells[a];
  }
  lower_ = config.origin == Origin::Corner ? Vec3{} : config.extent * -0.5;
  size_ = static_cast<std::size_t>(config.cells[0]) * static_cast<std::size_t>(config.cells[1]) *
          static_cast<std::size_t>(config.cells[2]);
}

Grid build_grid(const GridConfig& config) { return Grid(config); }

Vec3 Grid::upper() const { return lower_ + config_.extent; }
Vec3 Grid::center_of_box() const { return lower_ + config_.extent * 0.5; }

double Grid::min_spacing() const { return std::min({spacing_[0], spacing_[1], spacing_[2]}); }

bool Grid::fully_periodic() const {
  return std::all_of(config_.bc.begin(), config_.bc.end(),
                     [](Boundary b) { return b == Boundary::Periodic; });
}

bool Grid::has_dirichlet() const { return !fully_periodic(); }

std::array<int, 3> Grid::coords(std::size_t index) const {
  const auto nx = static_cast<std::size_t>(config_.cells[0]);
  const auto ny = static_cast<std::size_t>(config_.cells[1]);
  return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
          static_cast<int>(index / (nx * ny))};
}

Vec3 Grid::center(int i, int j, int k) const {
  return {lower_.x + (i + 0.5) * spacing_[0], lower_.y + (j + 0.5) * spacing_[1],
          lower_.z + (k + 0.5) * spacing_[2]};
}

Vec3 Grid::center(std::size_t index) const {
  const auto c = coords(index);
  return center(c[0], c[1], c[2]);
}

MappedCell Grid::map(int i, int j, int k, Ghost ghost) const {
  int c[3] = {i, j, k};
  double sign = 1.0;
  for (int a = 0; a < 3; ++a) {
    const int n = config_.cells[a];
    if (c[a] >= 0 && c[a] < n) continue;
    if (config_.bc[a] == Boundary::Periodic) {
      c[a] = ((c[a] % n) + n) % n;
    } else {
      c[a] = c[a] < 0 ? -1 - c[a] : 2 * n - 1 - c[a];
      if (ghost == Ghost::Odd) sign = -sign;
    }
  }
  return {index(c[0], c[1], c[2]), sign};
}

int Grid::face_count_along(int axis) const {
  return config_.cells[axis] + (config_.bc[axis] == Boundary::Dirichlet0 ? 1 : 0);
}

Vec3 Grid::face_center(int axis, int i, int j, int k) const {
  Vec3 p = center(i, j, k);
  p[axis] -= 0.5 * spacing_[axis];
  return p;
}

bool Grid::operator==(const Grid& o) const {
  return config_.cells == o.config_.cells && config_.extent == o.config_.extent &&
         config_.origin == o.config_.origin && config_.bc == o.config_.bc;
}

GridScalar sample_expression(const expr::Expression& e, const Grid& grid) {
  GridScalar s(grid);
  par::for_each(grid.size(), [&](std::size_t i) { s[i] = e.evaluate(grid.center(i)); });
  return s;
}

namespace {

std::vector<Vec3> sample_points(const Grid& grid, SampleLocation where) {
  std::vector<Vec3> pts;
  if (where == SampleLocation::Cells) {
    pts.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) pts[i] = grid.center(i);
    return pts;
  }
  for (int a = 0; a < 3; ++a) {
    int lim[3] = {grid.n(0), grid.n(1), grid.n(2)};
    lim[a] = grid.face_count_along(a);
    for (int k = 0; k < lim[2]; ++k)
      for (int j = 0; j < lim[1]; ++j)
        for (int i = 0; i < lim[0]; ++i) pts.push_back(grid.face_center(a, i, j, k));
  }
  return pts;
}

}  // namespace

GridSamples sample_on_grid(const FieldSpec& spec, const Grid& grid, SampleLocation where,
                           bool require_nonvanishing, double w_min) {
  GridSamples out;
  out.where = where;
  out.points = sample_points(grid, where);
  out.geometry.resize(out.points.size());
  par::for_each(out.points.size(), [&](std::size_t i) {
    out.geometry[i] = sample_geometry(spec, out.points[i], w_min);
  });
  out.min_magnitude = std::numeric_limits<double>::infinity();
  out.inf_abs_helicity = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.geometry.size(); ++i) {
    const auto& g = out.geometry[i];
    if (g.magnitude < out.min_magnitude) {
      out.min_magnitude = g.magnitude;
      out.min_magnitude_at = i;
    }
    const double ah = std::abs(g.helicity);
    if (ah < out.inf_abs_helicity) {
      out.inf_abs_helicity = ah;
      out.inf_abs_helicity_at = i;
    }
    out.sup_abs_helicity = std::max(out.sup_abs_helicity, ah);
  }
  if (require_nonvanishing && out.min_magnitude < w_min)
    throw NearNullField(out.points[out.min_magnitude_at], out.min_magnitude, out.min_magnitude_at);
  return out;
}

GridVector sample_field(const FieldSpec& spec, const Grid& grid) {
  GridVector v(grid);
  par::for_each(grid.size(), [&](std::size_t i) { v[i] = spec.value(grid.center(i)); });
  return v;
}

ExtendedCellField sample_cells_extended(const FieldSpec& spec, const Grid& grid) {
  ExtendedCellField f;
  f.dims = {grid.n(0) + 2, grid.n(1) + 2, grid.n(2) + 2};
  f.w.resize(static_cast<std::size_t>(f.dims[0]) * f.dims[1] * f.dims[2]);
  const std::size_t total = f.w.size();
  par::for_each(total, [&](std::size_t off) {
    const int i = static_cast<int>(off % f.dims[0]) - 1;
    const int j = static_cast<int>((off / f.dims[0]) % f.dims[1]) - 1;
    const int k = static_cast<int>(off / (static_cast<std::size_t>(f.dims[0]) * f.dims[1])) - 1;
    int c[3] = {i, j, k};
    for (int a = 0; a < 3; ++a) {
      const int n = grid.n(a);
      if (grid.bc(a) == Boundary::Periodic && (c[a] < 0 || c[a] >= n)) c[a] = ((c[a] % n) + n) % n;
    }
    f.w[off] = spec.value(grid.center(c[0], c[1], c[2]));
  });
  f.min_magnitude = std::numeric_limits<double>::infinity();
  for (const auto& w : f.w) f.min_magnitude = std::min(f.min_magnitude, norm(w));
  return f;
}

std::vector<FaceTangency> tangency_report(const FieldSpec& spec, const Grid& grid, double tol) {
  std::vector<FaceTangency> out;
  for (int a = 0; a < 3; ++a) {
    if (grid.bc(a) != Boundary::Dirichlet0) continue;
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      FaceTangency ft;
      ft.axis = a;
      ft.upper = side == 1;
      bool seen = false;
      for (int jc = 0; jc < grid.n(c); ++jc)
        for (int jb = 0; jb < grid.n(b); ++jb) {
          int idx[3];
          idx[a] = side == 0 ? 0 : grid.n(a);
          idx[b] = jb;
          idx[c] = jc;
          const Vec3 p = grid.face_center(a, idx[0], idx[1], idx[2]);
          const Vec3 w = spec.value(p);
          const double m = norm(w);
          if (!(m >= kDefaultWMin)) {
            ++ft.undefined_points;
            continue;
          }
          const double nc = std::abs(w[a]) / m;
          if (nc > ft.max_normal_component || !seen) {
            ft.max_normal_component = nc;
            ft.worst_point = p;
            seen = true;
          }
        }
      ft.pass = ft.max_normal_component <= tol && ft.undefined_points == 0;
      out.push_back(ft);
    }
  }
  return out;
}

namespace {

double neighbor(const std::vector<double>& v, const Grid& g, int i, int j, int k) {
  const MappedCell m = g.map(i, j, k);
  return m.sign * v[m.index];
}

}  // namespace

GridVector gradient(const GridScalar& u) {
  const Grid& g = u.grid;
  GridVector out(g);
  par::for_each(g.size(), [&](std::size_t idx) {
    const auto c = g.coords(idx);
    for (int a = 0; a < 3; ++a) {
      int p[3] = {c[0], c[1], c[2]}, m[3] = {c[0], c[1], c[2]};
      ++p[a];
      --m[a];
      out[idx][a] = (neighbor(u.values, g, p[0], p[1], p[2]) - neighbor(u.values, g, m[0], m[1], m[2])) /
                    (2.0 * g.spacing(a));
    }
  });
  return out;
}

namespace {

// d v_comp / dx_axis at a cell, central differences on one component.
double component_derivative(const GridVector& v, int comp, int axis, const std::array<int, 3>& c) {
  const Grid& g = v.grid;
  int p[3] = {c[0], c[1], c[2]}, m[3] = {c[0], c[1], c[2]};
  ++p[axis];
  --m[axis];
  const MappedCell mp = g.map(p[0], p[1], p[2]);
  const MappedCell mm = g.map(m[0], m[1], m[2]);
  return (mp.sign * v[mp.index][comp] - mm.sign * v[mm.index][comp]) / (2.0 * g.spacing(axis));
}

}  // namespace

GridScalar divergence(const GridVector& v) {
  const Grid& g = v.grid;
  GridScalar out(g);
  par::for_each(g.size(), [&](std::size_t idx) {
    const auto c = g.coords(idx);
    out[idx] = component_derivative(v, 0, 0, c) + component_derivative(v, 1, 1, c) +
               component_derivative(v, 2, 2, c);
  });
  return out;
}

GridVector curl(const GridVector& v) {
  const Grid& g = v.grid;
  GridVector out(g);
  par::for_each(g.size(), [&](std::size_t idx) {
    const auto c = g.coords(idx);
    out[idx] = {component_derivative(v, 2, 1, c) - component_derivative(v, 1, 2, c),
                component_derivative(v, 0, 2, c) - component_derivative(v, 2, 0, c),
                component_derivative(v, 1, 0, c) - component_derivative(v, 0, 1, c)};
  });
  return out;
}

std::vector<Vec3> unit_at_cells(const FieldSpec& spec, const Grid& grid, double w_min) {
  std::vector<Vec3> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 w = spec.value(grid.center(i));
    const double m = norm(w);
    if (!(m >= w_min)) throw NearNullField(grid.center(i), m, i);
    out[i] = w / m;
  }
  return out;
}

InnerProducts inner_products(const GridScalar& u, const GridScalar& v,
                             const std::vector<Vec3>& unit) {
  if (!(u.grid == v.grid) || unit.size() != u.grid.size())
    throw std::invalid_argument("inner_products: operands live on different grids");
  const GridVector gu = gradient(u);
  const GridVector gv = gradient(v);
  const double dv = u.grid.cell_volume();
  InnerProducts r;
  r.l2 = par::sum(u.grid.size(), [&](std::size_t i) { return u[i] * v[i]; }) * dv;
  r.perp = par::sum(u.grid.size(), [&](std::size_t i) {
             const Vec3& n = unit[i];
             const Vec3 pu = gu[i] - n * dot(n, gu[i]);
             const Vec3 pv = gv[i] - n * dot(n, gv[i]);
             return dot(pu, pv);
           }) * dv;
  r.hperp = r.l2 + r.perp;
  return r;
}

namespace le {

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated binary file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated binary file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace le

namespace {

void write_header(std::ostream& os, std::uint32_t kind, const Grid& g) {
  os.write("OLAP", 4);
  le::put_u32(os, kOlapVersion);
  le::put_u32(os, kind);
  for (int a = 0; a < 3; ++a) le::put_u64(os, static_cast<std::uint64_t>(g.n(a)));
  for (int a = 0; a < 3; ++a) le::put_f64(os, g.extent(a));
}

template <class T>
void write_file(const std::string& path, const T& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_olap(os, data);
}

}  // namespace

void write_olap(std::ostream& os, const GridScalar& s) {
  write_header(os, 0, s.grid);
  for (double v : s.values) le::put_f64(os, v);
}

void write_olap(std::ostream& os, const GridVector& v) {
  write_header(os, 1, v.grid);
  for (const Vec3& x : v.values)
    for (int c = 0; c < 3; ++c) le::put_f64(os, x[c]);
}

void write_olap(const std::string& path, const GridScalar& s) { write_file(path, s); }
void write_olap(const std::string& path, const GridVector& v) { write_file(path, v); }

OlapFile read_olap(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "OLAP") throw std::runtime_error("not an OLAP file");
  const std::uint32_t version = le::get_u32(is);
  if (version != kOlapVersion) throw std::runtime_error("unsupported OLAP version");
  OlapFile f;
  f.kind = le::get_u32(is);
  if (f.kind > 1) throw std::runtime_error("unknown OLAP payload kind");
  for (auto& d : f.dims) d = le::get_u64(is);
  for (int a = 0; a < 3; ++a) f.extent[a] = le::get_f64(is);
  const std::uint64_t count = f.dims[0] * f.dims[1] * f.dims[2] * (f.kind == 1 ? 3 : 1);
  f.payload.resize(count);
  for (auto& v : f.payload) v = le::get_f64(is);
  return f;
}

OlapFile read_olap(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_olap(is);
}

}  // namespace olap
