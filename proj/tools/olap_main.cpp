#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>

#include "olap/commands.hpp"
#include "olap/parallel.hpp"
#include "olap/toml.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out = "out";
  int workers = 0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<double> tol, dt, T;
};

// Per-command overrides; flags that do not apply are config errors.
void apply(const std::string& cmd, const Flags& f, olap::RunConfig& c) {
  auto reject = [&](bool given, const char* flag, const char* where) {
    if (given) throw olap::InvalidConfig(std::string(flag) + " applies only to " + where);
  };
  if (f.k) {
    reject(cmd != "spectrum", "-k", "spectrum");
    c.spectrum.k = *f.k;
    c.spectrum.max_k = std::max(c.spectrum.max_k, *f.k);
  }
  if (f.seed) {
    reject(cmd != "mc", "--seed", "mc");
    c.mc.seed = *f.seed;
  }
  if (f.tol) {
    if (cmd == "solve" || cmd == "convergence") c.solver.tol = *f.tol;
    else if (cmd == "spectrum") c.spectrum.tol = *f.tol;
    else if (cmd == "evolve") c.evolve.solver_tol = *f.tol;
    else reject(true, "--tol", "solve, convergence, spectrum and evolve");
  }
  for (auto [value, name] : {std::pair{f.dt, "--dt"}, std::pair{f.T, "--T"}}) {
    if (!value) continue;
    const bool is_dt = std::string(name) == "--dt";
    if (cmd == "evolve") (is_dt ? c.evolve.dt : c.evolve.T) = *value;
    else if (cmd == "mc") (is_dt ? c.mc.dt : c.mc.T) = *value;
    else reject(true, name, "evolve and mc");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orthogonal-Laplacian toolkit: helicity, Poincare bounds, constrained diffusion"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "TOML run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", f.out, "output directory")->capture_default_str();
  app.add_option("--workers", f.workers, "cap on worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", f.seed, "master seed for mc");
  app.add_option("-k", f.k, "number of eigenvalues for spectrum")->check(CLI::PositiveNumber);
  app.add_option("--tol", f.tol, "solver tolerance")->check(CLI::PositiveNumber);
  app.add_option("--dt", f.dt, "time step")->check(CLI::PositiveNumber);
  app.add_option("--T", f.T, "final time")->check(CLI::PositiveNumber);
  const std::map<std::string, std::string> about = {
      {"classify", "helicity classification of the field"},
      {"tangency", "normal component of the unit field on each face"},
      {"poincare", "auxiliary field constants, optionally checked against lambda_min"},
      {"solve", "solve Lap_perp u = rhs"},
      {"spectrum", "smallest eigenvalues and nullspace dimension"},
      {"evolve", "Fokker-Planck evolution with diagnostics"},
      {"mc", "particle ensembles compared with the PDE"},
      {"convergence", "manufactured-solution order study"},
  };
  for (const auto& name : olap::command_names()) app.add_subcommand(name, about.at(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : olap::kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  olap::par::set_workers(f.workers);
  olap::RunConfig config;
  try {
    config = olap::load_config(f.config);
    apply(cmd, f, config);
  } catch (const olap::toml::ParseError& e) {
    std::cerr << "config error: " << f.config << ": " << e.what() << '\n';
    return olap::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return olap::kExitConfig;
  }
  return olap::run_command(cmd, config, f.out, std::cout, std::cerr);
}
