#include "olap/montecarlo.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include "olap/parallel.hpp"
#include "olap/text.hpp"

namespace olap {

namespace rng {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53, kM1 = 0xCD9E8D57;
constexpr std::uint32_t kW0 = 0x9E3779B9, kW1 = 0xBB67AE85;

Counter counter_for(std::uint64_t particle, std::uint64_t step, Stream stream) {
  return {static_cast<std::uint32_t>(particle), static_cast<std::uint32_t>(particle >> 32),
          static_cast<std::uint32_t>(step),
          static_cast<std::uint32_t>(step >> 32) ^ (static_cast<std::uint32_t>(stream) << 31)};
}

Key key_for(std::uint64_t seed) { return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}; }

}  // namespace

Counter philox4x32(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

double open_unit(std::uint32_t w) { return (static_cast<double>(w) + 0.5) * 0x1p-32; }

std::array<double, 4> uniforms(std::uint64_t seed, std::uint64_t particle, std::uint64_t step, Stream stream) {
  const Counter r = philox4x32(counter_for(particle, step, stream), key_for(seed));
  return {open_unit(r[0]), open_unit(r[1]), open_unit(r[2]), open_unit(r[3])};
}

std::array<double, 4> normals(std::uint64_t seed, std::uint64_t particle, std::uint64_t step, Stream stream) {
  const auto u = uniforms(seed, particle, step, stream);
  std::array<double, 4> z{};
  for (int i = 0; i < 2; ++i) {
    const double r = std::sqrt(-2.0 * std::log(u[2 * i]));
    const double a = 2.0 * std::numbers::pi * u[2 * i + 1];
    z[2 * i] = r * std::cos(a);
    z[2 * i + 1] = r * std::sin(a);
  }
  return z;
}

}  // namespace rng

std::string to_string(SdeScheme s) { return s == SdeScheme::ItoEuler ? "ito_euler" : "stratonovich_heun"; }

std::optional<SdeScheme> sde_scheme_from_string(const std::string& name) {
  if (name == "ito_euler") return SdeScheme::ItoEuler;
  if (name == "stratonovich_heun") return SdeScheme::StratonovichHeun;
  return std::nullopt;
}

namespace {

void require_periodic(const Grid& g) {
  if (!g.fully_periodic()) throw InvalidConfig("particle simulation requires a fully periodic box");
}

double wrap(double x, double lo, double len) {
  double r = std::fmod(x - lo, len);
  if (r < 0.0) r += len;
  if (r >= len) r = 0.0;
  return lo + r;
}

Vec3 wrap(const Vec3& x, const Vec3& lo, const Vec3& len) {
  return {wrap(x.x, lo.x, len.x), wrap(x.y, lo.y, len.y), wrap(x.z, lo.z, len.z)};
}

}  // namespace

std::vector<Vec3> uniform_particles(const Grid& grid, std::size_t n, std::uint64_t seed) {
  require_periodic(grid);
  std::vector<Vec3> x(n);
  const Vec3 lo = grid.lower(), len = grid.config().extent;
  par::for_each(n, [&](std::size_t p) {
    const auto u = rng::uniforms(seed, p, 0, rng::Stream::Placement);
    x[p] = {lo.x + u[0] * len.x, lo.y + u[1] * len.y, lo.z + u[2] * len.z};
  });
  return x;
}

std::vector<Vec3> sample_particles(const GridScalar& density, std::size_t n, std::uint64_t seed) {
  const Grid& g = density.grid;
  std::vector<double> cdf(g.size());
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(density[i] >= 0.0) || !std::isfinite(density[i]))
      throw InvalidConfig("density must be finite and nonnegative to draw particles");
    total += density[i];
    cdf[i] = total;
  }
  if (!(total > 0.0)) throw InvalidConfig("density has zero mass");
  std::vector<Vec3> x(n);
  par::for_each(n, [&](std::size_t p) {
    const auto u = rng::uniforms(seed, p, 0, rng::Stream::Placement);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u[0] * total);
    if (it == cdf.end()) --it;
    const auto c = g.coords(static_cast<std::size_t>(it - cdf.begin()));
    const Vec3 lo = g.lower();
    x[p] = {lo.x + (c[0] + u[1]) * g.spacing(0), lo.y + (c[1] + u[2]) * g.spacing(1),
            lo.z + (c[2] + u[3]) * g.spacing(2)};
  });
  return x;
}

Vec3 ito_increment(const Vec3& w, const Vec3& dW) { return cross(w, dW); }

Ensemble simulate(const FieldSpec& field, const Grid& box, std::vector<Vec3> initial, double dt, double T,
                  std::uint64_t seed, SdeScheme scheme) {
  require_periodic(box);
  if (!(dt > 0.0) || !(T > 0.0)) throw InvalidConfig("dt and T must be positive");
  Ensemble e;
  e.lower = box.lower();
  e.extent = box.config().extent;
  e.seed = seed;
  e.scheme = scheme;
  e.steps = static_cast<std::size_t>(std::ceil(T / dt * (1.0 - 1e-12)));
  e.dt = T / static_cast<double>(e.steps);
  e.elapsed = T;
  e.positions = std::move(initial);
  const double s = std::sqrt(e.dt);
  par::for_each(e.positions.size(), [&](std::size_t p) {
    Vec3 x = wrap(e.positions[p], e.lower, e.extent);
    for (std::size_t k = 0; k < e.steps; ++k) {
      const auto z = rng::normals(seed, p, k);
      const Vec3 dW{s * z[0], s * z[1], s * z[2]};
      const Vec3 w = field.value(x);
      Vec3 dx = cross(w, dW);
      if (scheme == SdeScheme::StratonovichHeun) dx = cross(0.5 * (w + field.value(x + dx)), dW);
      x = wrap(x + dx, e.lower, e.extent);
    }
    e.positions[p] = x;
  });
  return e;
}

GridScalar histogram(const std::vector<Vec3>& positions, const Grid& bins) {
  require_periodic(bins);
  const std::size_t nb = bins.size();
  std::vector<std::uint64_t> counts(nb, 0);
  const auto np = static_cast<std::int64_t>(positions.size());
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(nb, 0);
#pragma omp for schedule(static) nowait
    for (std::int64_t p = 0; p < np; ++p) {
      const Vec3 x = wrap(positions[static_cast<std::size_t>(p)], bins.lower(), bins.config().extent);
      int c[3];
      for (int a = 0; a < 3; ++a)
        c[a] = std::clamp(static_cast<int>((x[a] - bins.lower()[a]) / bins.spacing(a)), 0, bins.n(a) - 1);
      ++local[bins.index(c[0], c[1], c[2])];
    }
#pragma omp critical
    for (std::size_t b = 0; b < nb; ++b) counts[b] += local[b];
  }
  GridScalar h(bins);
  const double norm = 1.0 / (static_cast<double>(positions.size()) * bins.cell_volume());
  for (std::size_t b = 0; b < nb; ++b) h[b] = static_cast<double>(counts[b]) * norm;
  return h;
}

namespace {

Grid bin_grid(const Vec3& lower, const Vec3& extent, int bins) {
  GridConfig c;
  c.cells = {bins, bins, bins};
  c.extent = extent;
  c.origin = Origin::Corner;
  Grid g(c);
  if (lower.x != 0.0 || lower.y != 0.0 || lower.z != 0.0) {
    c.origin = Origin::Center;
    g = Grid(c);
    if (!(g.lower() == lower)) throw InvalidConfig("ensemble box origin is neither corner nor centered");
  }
  return g;
}

}  // namespace

GridScalar histogram(const Ensemble& e, int bins) {
  if (bins < 1) throw InvalidConfig("histogram needs at least one bin per axis");
  return histogram(e.positions, bin_grid(e.lower, e.extent, bins));
}

GridScalar coarsen(const GridScalar& fine, int bins) {
  const Grid& f = fine.grid;
  for (int a = 0; a < 3; ++a)
    if (bins < 1 || f.n(a) % bins != 0)
      throw InvalidConfig("fine grid cells are not a multiple of the bin count");
  GridConfig c = f.config();
  c.cells = {bins, bins, bins};
  GridScalar out{Grid(c)};
  const int r[3] = {f.n(0) / bins, f.n(1) / bins, f.n(2) / bins};
  const double weight = 1.0 / (r[0] * r[1] * r[2]);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto q = f.coords(i);
    out[out.grid.index(q[0] / r[0], q[1] / r[1], q[2] / r[2])] += fine[i] * weight;
  }
  return out;
}

Discrepancy compare(const GridScalar& a, const GridScalar& b) {
  if (!(a.grid == b.grid)) throw InvalidConfig("compared densities live on different grids");
  Discrepancy d;
  const double dv = a.grid.cell_volume();
  double sq = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double e = std::abs(a[i] - b[i]);
    d.l1 += e * dv;
    sq += e * e * dv;
    d.linf = std::max(d.linf, e);
  }
  d.l2 = std::sqrt(sq);
  return d;
}

double expected_l1_noise(const GridScalar& density, std::size_t n) {
  const double dv = density.grid.cell_volume();
  double s = 0.0;
  for (double v : density.values) {
    const double p = std::clamp(v * dv, 0.0, 1.0);
    s += std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  }
  return std::sqrt(2.0 / std::numbers::pi) * s;
}

ChiSquare chi_square_uniform(const GridScalar& h, std::size_t n) {
  ChiSquare c;
  const double expected = static_cast<double>(n) / static_cast<double>(h.values.size());
  const double to_count = static_cast<double>(n) * h.grid.cell_volume();
  for (double v : h.values) {
    const double d = std::round(v * to_count) - expected;
    c.statistic += d * d / expected;
  }
  c.dof = h.values.size() - 1;
  c.p_value = boost::math::gamma_q(0.5 * static_cast<double>(c.dof), 0.5 * c.statistic);
  return c;
}

void write_compare_csv(std::ostream& os, const std::vector<std::pair<std::string, Discrepancy>>& rows) {
  os << "pair,l1,l2,linf\n";
  for (const auto& [name, d] : rows)
    os << name << ',' << format_double(d.l1) << ',' << format_double(d.l2) << ',' << format_double(d.linf) << '\n';
}

void write_oens(std::ostream& os, const std::vector<Vec3>& x) {
  os.write("OENS", 4);
  le::put_u32(os, kOensVersion);
  le::put_u64(os, x.size());
  for (const auto& p : x) {
    le::put_f64(os, p.x);
    le::put_f64(os, p.y);
    le::put_f64(os, p.z);
  }
  if (!os) throw std::runtime_error("failed to write ensemble");
}

void write_oens(const std::string& path, const std::vector<Vec3>& x) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_oens(os, x);
}

std::vector<Vec3> read_oens(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "OENS") throw std::runtime_error("not an OENS stream");
  if (le::get_u32(is) != kOensVersion) throw std::runtime_error("unsupported OENS version");
  const std::uint64_t n = le::get_u64(is);
  std::vector<Vec3> x;
  x.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    const double a = le::get_f64(is), b = le::get_f64(is), c = le::get_f64(is);
    x.push_back({a, b, c});
  }
  return x;
}

std::vector<Vec3> read_oens(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_oens(is);
}

}  // namespace olap
