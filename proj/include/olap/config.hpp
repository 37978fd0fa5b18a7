#pragma once

// Run configuration: TOML tables mapped onto typed settings. Unknown tables
// and keys are rejected; to_toml echoes the fully resolved configuration.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "olap/field.hpp"
#include "olap/grid.hpp"

namespace olap {

inline constexpr const char* kToolkitVersion = "1.0.0";

struct FieldConfig {
  std::string kind = "rotating_shear";
  int axis = 2;
  double alpha = 1.0;
  double a = 1.0, b = 1.0, c = 1.0;
  std::string phi, psi, theta;  // clebsch
  std::string wx, wy, wz;       // custom
  double fd_step = kDefaultFdStep;
  double w_min = kDefaultWMin;
};

struct ProblemConfig {
  std::string rhs = "0";
  std::optional<std::string> exact;
};

struct SolverConfig {
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  bool jacobi = true;
};

struct SpectrumConfig {
  std::size_t k = 8;
  std::size_t max_k = 256;
  double tol = 0.0;  // 0: relative default of the eigen-solver
};

struct PoincareConfig {
  std::string construction = "helicity_div";
  std::optional<Vec3> origin;
  std::string phi, psi, theta;  // optional Clebsch potentials
  double tau_h = 1e-8;
  double slack = 0.1;
  bool verify_bound = false;
};

struct EvolveConfig {
  std::string scheme = "implicit_euler";
  double dt = 0.01;
  double T = 1.0;
  std::size_t stride = 0;
  std::optional<int> leaf_axis;
  std::string initial = "blob";  // "blob", "uniform" or an expression
  double blob_sigma = 0.5;
  std::optional<Vec3> blob_center;
  double solver_tol = 1e-12;
};

struct McConfig {
  std::size_t N = 100000;
  double dt = 0.005;
  double T = 0.5;
  std::uint64_t seed = 1;
  std::string scheme = "both";  // "ito_euler", "stratonovich_heun" or "both"
  int bins = 8;
  bool compare_pde = true;
};

struct ConvergenceConfig {
  std::vector<int> grids{16, 32};
  int fine_factor = 2;
};

struct RunConfig {
  GridConfig domain;
  FieldConfig field;
  ProblemConfig problem;
  SolverConfig solver;
  SpectrumConfig spectrum;
  PoincareConfig poincare;
  EvolveConfig evolve;
  McConfig mc;
  ConvergenceConfig convergence;
};

/// Throws toml::ParseError on syntax errors and InvalidConfig on unknown or
/// ill-typed entries.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Re-validates a configuration assembled or modified in code.
void validate(const RunConfig& config);

std::string to_toml(const RunConfig& config);

FieldSpec make_field(const FieldConfig& config);

/// Parses a number literal or constant expression such as "2*pi".
double constant_expression(const std::string& text);

}  // namespace olap
