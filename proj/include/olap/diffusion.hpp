#pragma once

// Time evolution of a probability density under the flux-form generator
// du/dt = L u, with conservation and homogenization diagnostics.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "olap/assembly.hpp"
#include "olap/grid.hpp"

namespace olap {

enum class TimeScheme { ExplicitRk2, ImplicitEuler };

std::string to_string(TimeScheme s);  // "rk2", "implicit_euler"
std::optional<TimeScheme> time_scheme_from_string(const std::string& name);

/// h_min^2 / (6 sup w^2).
double cfl_dt(double h_min, double sup_w2);
double cfl_dt(const Grid& grid, const FieldSpec& field);

/// Raised on a non-finite state or a failed implicit solve.
class EvolutionFailure : public std::runtime_error {
 public:
  EvolutionFailure(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct EvolutionConfig {
  TimeScheme scheme = TimeScheme::ImplicitEuler;
  double dt = 0.01;
  double T = 1.0;
  /// Snapshot every `stride` steps (0: none); the initial state is snapshot 0.
  std::size_t stride = 0;
  /// Axis whose coordinate labels the leaves of an integrable field.
  std::optional<int> leaf_axis;
  double solver_tol = 1e-12;
  std::size_t max_iter = 10000;
  /// Reject explicit steps above cfl_dt; set by callers that pass sup_w2.
  std::optional<double> explicit_dt_limit;
};

struct Diagnostics {
  std::size_t step = 0;
  double time = 0.0;
  double mass = 0.0;      // sum u dV
  double variance = 0.0;  // sum (u - mean)^2 dV
  double energy = 0.0;    // sum u^2 dV
  std::vector<double> leaf_mass;
  std::vector<double> leaf_mean;
  double in_leaf_variance = 0.0;  // sum over leaves of sum (u - leaf mean)^2 dV
  std::size_t solver_iterations = 0;
};

Diagnostics diagnose(const GridScalar& u, std::optional<int> leaf_axis = std::nullopt);

struct Snapshot {
  std::size_t step = 0;
  double time = 0.0;
  GridScalar u;
};

struct EvolutionResult {
  GridScalar final_state;
  std::vector<Diagnostics> series;
  std::vector<Snapshot> snapshots;
  std::size_t steps = 0;
  double dt = 0.0;  // effective step, T / steps
  bool normal_equations = false;
  std::size_t solver_iterations = 0;
};

/// Validates u0 (finite, nonnegative, positive mass) and rescales it to unit mass.
GridScalar normalize_density(GridScalar u0);

/// exp(-|x - c|^2 / (2 sigma^2)) with minimum-image distances on periodic
/// axes, normalized to unit mass.
GridScalar gaussian_blob(const Grid& grid, const Vec3& center, double sigma);

EvolutionResult evolve(const GridScalar& u0, const GeneratorOperator& L, const EvolutionConfig& config);

/// step,time,mass,variance,energy[,in_leaf_variance,leaf_mass_0..]
void write_diagnostics_csv(std::ostream& os, const std::vector<Diagnostics>& series);

/// Writes snapshot_<step>.olap files into `dir`; returns the paths.
std::vector<std::string> write_snapshots(const std::string& dir, const std::vector<Snapshot>& snapshots);

}  // namespace olap
