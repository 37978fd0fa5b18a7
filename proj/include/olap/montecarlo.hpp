#pragma once

// Particle ensembles for the stochastic field-line motion dx = w(x) x dW on
// fully periodic boxes, with a counter-based generator so every increment is
// a pure function of (seed, particle, step).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "olap/field.hpp"
#include "olap/grid.hpp"

namespace olap {

namespace rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds.
Counter philox4x32(Counter ctr, Key key);

/// (w + 1/2) / 2^32, uniform in the open interval (0, 1).
double open_unit(std::uint32_t w);

enum class Stream : std::uint32_t { Increment = 0, Placement = 1 };

/// Four independent standard normals (Box-Muller) for one (seed, particle, step).
std::array<double, 4> normals(std::uint64_t seed, std::uint64_t particle, std::uint64_t step,
                              Stream stream = Stream::Increment);
/// Four uniforms in (0, 1) for one (seed, particle, step).
std::array<double, 4> uniforms(std::uint64_t seed, std::uint64_t particle, std::uint64_t step,
                               Stream stream = Stream::Increment);

}  // namespace rng

enum class SdeScheme { ItoEuler, StratonovichHeun };

std::string to_string(SdeScheme s);  // "ito_euler", "stratonovich_heun"
std::optional<SdeScheme> sde_scheme_from_string(const std::string& name);

struct Ensemble {
  std::vector<Vec3> positions;
  Vec3 lower;
  Vec3 extent;
  std::uint64_t seed = 0;
  SdeScheme scheme = SdeScheme::ItoEuler;
  double dt = 0.0;
  std::size_t steps = 0;
  double elapsed = 0.0;
};

/// N points uniformly distributed over the box of a periodic grid.
std::vector<Vec3> uniform_particles(const Grid& grid, std::size_t n, std::uint64_t seed);

/// N points drawn from a cell-wise constant density: a cell is chosen by its
/// mass, then a uniform point inside it.
std::vector<Vec3> sample_particles(const GridScalar& density, std::size_t n, std::uint64_t seed);

/// Ito-Euler increment w x dW.
Vec3 ito_increment(const Vec3& w, const Vec3& dW);

/// Advances the particles to time T with steps of T / ceil(T / dt). Requires
/// a fully periodic grid; positions are wrapped into the box after each step.
Ensemble simulate(const FieldSpec& field, const Grid& box, std::vector<Vec3> initial, double dt, double T,
                  std::uint64_t seed, SdeScheme scheme);

/// Density on a periodic grid with `bins` cells per axis over the ensemble box.
GridScalar histogram(const Ensemble& ensemble, int bins);
GridScalar histogram(const std::vector<Vec3>& positions, const Grid& bins);

/// Conservative average of a fine density onto `bins` cells per axis; the
/// fine cell counts must be multiples of `bins`.
GridScalar coarsen(const GridScalar& fine, int bins);

struct Discrepancy {
  double l1 = 0.0;    // sum |a - b| dV
  double l2 = 0.0;    // sqrt(sum (a - b)^2 dV)
  double linf = 0.0;  // max |a - b|
};

/// Throws InvalidConfig when the grids differ.
Discrepancy compare(const GridScalar& a, const GridScalar& b);

/// Expected l1 distance between a density and its N-sample histogram:
/// sqrt(2/pi) sum_b sqrt(p_b (1 - p_b) / N) with bin masses p_b.
double expected_l1_noise(const GridScalar& density, std::size_t n);

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 0.0;
};

/// Pearson test of binned counts (histogram * N * dV) against the uniform law.
ChiSquare chi_square_uniform(const GridScalar& histogram, std::size_t n);

void write_compare_csv(std::ostream& os, const std::vector<std::pair<std::string, Discrepancy>>& rows);

// OENS binary format: "OENS", u32 version, u64 N, then 3N little-endian f64
// (x, y, z per particle).
inline constexpr std::uint32_t kOensVersion = 1;

void write_oens(std::ostream& os, const std::vector<Vec3>& positions);
void write_oens(const std::string& path, const std::vector<Vec3>& positions);
std::vector<Vec3> read_oens(std::istream& is);
std::vector<Vec3> read_oens(const std::string& path);

}  // namespace olap
