#include "olap/assembly.hpp"

#include <array>
#include <cmath>

#include "olap/parallel.hpp"

namespace olap {

namespace {

using Coord = std::array<int, 3>;
using Local = std::array<double, 10>;

// Local cells of a face: 0 L, 1 R, 2 L+b, 3 L-b, 4 R+b, 5 R-b, 6 L+c, 7 L-c, 8 R+c, 9 R-c.
constexpr int kLocal = 10;

Mat3 perp_tensor(const Vec3& w) { return perp_projector(w / norm(w)); }

Mat3 diffusion_tensor(const Vec3& w) {
  Mat3 d;
  const double w2 = dot(w, w);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d[i][j] = (i == j ? w2 : 0.0) - w[i] * w[j];
  return d;
}

Mat3 face_tensor(const Mat3& a, const Mat3& b) {
  Mat3 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = 0.5 * (a[i][j] + b[i][j]);
  return t;
}

Local difference(int plus, int minus, double h) {
  Local d{};
  d[static_cast<std::size_t>(plus)] += 1.0 / h;
  d[static_cast<std::size_t>(minus)] -= 1.0 / h;
  return d;
}

Local mean4(const std::array<Local, 4>& d) {
  Local m{};
  for (const auto& x : d)
    for (int i = 0; i < kLocal; ++i) m[i] += 0.25 * x[i];
  return m;
}

// Adds the face energy contributions of every face to acc, scaled by `scale`.
template <class Tensor>
void add_face_energy(RowAccumulator& acc, const Grid& g, const ExtendedCellField& ext, Tensor tensor,
                     Ghost ghost, bool boundary_faces, double scale) {
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const bool periodic = g.bc(a) == Boundary::Periodic;
    const double ha = g.spacing(a), hb = g.spacing(b), hc = g.spacing(c);
    int lo[3] = {0, 0, 0}, hi[3] = {g.n(0), g.n(1), g.n(2)};
    if (!periodic) {
      if (boundary_faces) hi[a] += 1;
      else lo[a] = 1;
    }
    // Difference functionals in local coordinates; they do not depend on the face.
    const Local da = difference(1, 0, ha);
    const std::array<Local, 4> db = {difference(2, 0, hb), difference(0, 3, hb), difference(4, 1, hb),
                                     difference(1, 5, hb)};
    const std::array<Local, 4> dc = {difference(6, 0, hc), difference(0, 7, hc), difference(8, 1, hc),
                                     difference(1, 9, hc)};
    const Local gb = mean4(db), gc = mean4(dc);

    for (int k = lo[2]; k < hi[2]; ++k)
      for (int j = lo[1]; j < hi[1]; ++j)
        for (int i = lo[0]; i < hi[0]; ++i) {
          const Coord r{i, j, k};
          Coord l = r;
          --l[a];
          const bool boundary = !periodic && (r[a] == 0 || r[a] == g.n(a));
          const double weight = scale * (boundary ? 0.5 : 1.0) / 3.0;
          const Mat3 t = face_tensor(tensor(ext.at(l[0], l[1], l[2])), tensor(ext.at(r[0], r[1], r[2])));

          std::array<Coord, kLocal> loc;
          loc.fill(l);
          loc[1] = r;
          loc[2][b] += 1;
          loc[3][b] -= 1;
          loc[4] = r;
          loc[4][b] += 1;
          loc[5] = r;
          loc[5][b] -= 1;
          loc[6][c] += 1;
          loc[7][c] -= 1;
          loc[8] = r;
          loc[8][c] += 1;
          loc[9] = r;
          loc[9][c] -= 1;
          std::array<MappedCell, kLocal> mc;
          for (int m = 0; m < kLocal; ++m) mc[m] = g.map(loc[m][0], loc[m][1], loc[m][2], ghost);

          std::array<std::array<double, kLocal>, kLocal> M{};
          for (int m = 0; m < kLocal; ++m)
            for (int n = m; n < kLocal; ++n) {
              double v = t[a][a] * da[m] * da[n] + t[a][b] * (da[m] * gb[n] + gb[m] * da[n]) +
                         t[a][c] * (da[m] * gc[n] + gc[m] * da[n]) +
                         t[b][c] * (gb[m] * gc[n] + gc[m] * gb[n]);
              double sb = 0.0, sc = 0.0;
              for (int q = 0; q < 4; ++q) {
                sb += db[q][m] * db[q][n];
                sc += dc[q][m] * dc[q][n];
              }
              v += 0.25 * (t[b][b] * sb + t[c][c] * sc);
              M[m][n] = M[n][m] = weight * v;
            }
          // Fold local cells that map to the same unknown, then scatter the
          // folded matrix; mirroring it keeps (i,j) and (j,i) bitwise equal.
          std::array<std::size_t, kLocal> uid;
          std::array<int, kLocal> slot;
          int nu = 0;
          for (int m = 0; m < kLocal; ++m) {
            int s = 0;
            while (s < nu && uid[s] != mc[m].index) ++s;
            if (s == nu) uid[nu++] = mc[m].index;
            slot[m] = s;
          }
          std::array<std::array<double, kLocal>, kLocal> F{};
          for (int p = 0; p < nu; ++p)
            for (int q = p; q < nu; ++q) {
              double v = 0.0;
              for (int m = 0; m < kLocal; ++m) {
                if (slot[m] != p) continue;
                for (int n = 0; n < kLocal; ++n)
                  if (slot[n] == q) v += mc[m].sign * mc[n].sign * M[m][n];
              }
              F[p][q] = F[q][p] = v;
            }
          for (int p = 0; p < nu; ++p)
            for (int q = 0; q < nu; ++q)
              if (F[p][q] != 0.0) acc.add(uid[p], uid[q], F[p][q]);
        }
  }
}

constexpr std::size_t kStencil = 27;

}  // namespace

PerpLaplacian assemble_perp_laplacian(const FieldSpec& field, const Grid& grid, double w_min) {
  const ExtendedCellField ext = sample_cells_extended(field, grid);
  if (!(ext.min_magnitude >= w_min)) sample_on_grid(field, grid, SampleLocation::Cells, true, w_min);
  if (!(ext.min_magnitude >= w_min)) throw NearNullField(grid.lower(), ext.min_magnitude);
  RowAccumulator acc(grid.size(), kStencil);
  add_face_energy(acc, grid, ext, perp_tensor, Ghost::Odd, true, 1.0);
  return {grid, acc.to_csr(grid.size()), ext.min_magnitude};
}

double perp_form(const PerpLaplacian& op, std::span<const double> u, std::span<const double> v) {
  const std::vector<double> ku = op.matrix * u;
  return par::dot(v, ku) * op.grid.cell_volume();
}

GeneratorOperator assemble_fpe_generator(const FieldSpec& field, const Grid& grid, double w_min) {
  const ExtendedCellField ext = sample_cells_extended(field, grid);
  if (!(ext.min_magnitude >= w_min)) sample_on_grid(field, grid, SampleLocation::Cells, true, w_min);
  if (!(ext.min_magnitude >= w_min)) throw NearNullField(grid.lower(), ext.min_magnitude);
  RowAccumulator acc(grid.size(), kStencil);
  add_face_energy(acc, grid, ext, diffusion_tensor, Ghost::Even, false, -0.5);

  // advective flux 1/2 u_f (w x curl w)_a through interior and periodic faces
  for (int a = 0; a < 3; ++a) {
    const bool periodic = grid.bc(a) == Boundary::Periodic;
    int lo[3] = {0, 0, 0};
    if (!periodic) lo[a] = 1;
    for (int k = lo[2]; k < grid.n(2); ++k)
      for (int j = lo[1]; j < grid.n(1); ++j)
        for (int i = lo[0]; i < grid.n(0); ++i) {
          Coord l{i, j, k};
          --l[a];
          const FieldJet jet = field.jet(grid.face_center(a, i, j, k), 1);
          const Vec3 cw = cross(jet.w, curl_of(jet.jacobian));
          const double q = 0.25 * cw[a] / grid.spacing(a);
          const std::size_t L = grid.map(l[0], l[1], l[2]).index;
          const std::size_t R = grid.index(i, j, k);
          acc.add(L, L, q);
          acc.add(L, R, q);
          acc.add(R, L, -q);
          acc.add(R, R, -q);
        }
  }
  GeneratorOperator gen{grid, acc.to_csr(grid.size()), 0.0};
  const double scale = gen.matrix.max_abs();
  gen.relative_asymmetry = scale > 0.0 ? gen.matrix.max_asymmetry() / scale : 0.0;
  return gen;
}

GridScalar fpe_stationary_residual(const GridScalar& u, const FieldSpec& field, double w_min) {
  const Grid& g = u.grid;
  GridScalar out(g);
  auto val = [&](int i, int j, int k) {
    const MappedCell m = g.map(i, j, k);
    return m.sign * u[m.index];
  };
  par::for_each(g.size(), [&](std::size_t idx) {
    const auto c = g.coords(idx);
    const GeometrySample s = sample_geometry(field, g.center(idx), w_min);
    s.require_unit();
    Vec3 grad;
    Mat3 hess;
    for (int a = 0; a < 3; ++a) {
      Coord p = c, m = c;
      ++p[a];
      --m[a];
      const double up = val(p[0], p[1], p[2]), um = val(m[0], m[1], m[2]);
      const double h = g.spacing(a);
      grad[a] = (up - um) / (2.0 * h);
      hess[a][a] = (up - 2.0 * u[idx] + um) / (h * h);
      for (int b = a + 1; b < 3; ++b) {
        Coord pp = c, pm = c, mp = c, mm = c;
        ++pp[a], ++pp[b];
        ++pm[a], --pm[b];
        --mp[a], ++mp[b];
        --mm[a], --mm[b];
        hess[a][b] = hess[b][a] = (val(pp[0], pp[1], pp[2]) - val(pm[0], pm[1], pm[2]) -
                                   val(mp[0], mp[1], mp[2]) + val(mm[0], mm[1], mm[2])) /
                                  (4.0 * h * g.spacing(b));
      }
    }
    const Mat3 P = perp_projector(s.unit);
    double lap = dot(s.field_force - s.unit * s.div_unit, grad);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) lap += P[a][b] * hess[a][b];
    const double w2 = s.magnitude * s.magnitude;
    const Vec3 grad_perp_u = P * grad;
    const Vec3 grad_perp_log = P * (s.grad_w2 / w2);
    out[idx] = lap + dot(s.field_force + grad_perp_log * 1.5, grad_perp_u) +
               (dot(grad_perp_log, s.field_force) + s.field_charge + s.lap_perp_w2 / (2.0 * w2)) * u[idx];
  });
  return out;
}

GridScalar flux_form_residual(const GeneratorOperator& gen, const GridScalar& u, const FieldSpec& field) {
  GridScalar out(u.grid);
  gen.matrix.multiply(u.values, out.values);
  par::for_each(u.grid.size(), [&](std::size_t i) {
    const Vec3 w = field.value(u.grid.center(i));
    out[i] *= 2.0 / dot(w, w);
  });
  return out;
}

}  // namespace olap
