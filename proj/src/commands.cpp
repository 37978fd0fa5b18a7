#include "olap/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "olap/diffusion.hpp"
#include "olap/montecarlo.hpp"
#include "olap/poincare.hpp"
#include "olap/studies.hpp"
#include "olap/text.hpp"
#include "olap/toml.hpp"

namespace fs = std::filesystem;

namespace olap {

namespace {

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered "key = value" report.
class KeyValues {
 public:
  KeyValues& add(const std::string& k, double v) { return put(k, format_double(v)); }
  KeyValues& add(const std::string& k, std::size_t v) { return put(k, std::to_string(v)); }
  KeyValues& add(const std::string& k, int v) { return put(k, std::to_string(v)); }
  KeyValues& add(const std::string& k, bool v) { return put(k, v ? "true" : "false"); }
  KeyValues& add(const std::string& k, const std::string& v) { return put(k, v); }
  KeyValues& add(const std::string& k, const char* v) { return put(k, v); }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  KeyValues& put(const std::string& k, const std::string& v) {
    text_ += k + " = " + v + '\n';
    return *this;
  }
};

struct Context {
  const RunConfig& cfg;
  fs::path out;
  std::ostream& log;

  std::ofstream open(const std::string& name) const {
    std::ofstream os(out / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (out / name).string());
    return os;
  }
  void write(const std::string& name, const std::string& text) const { open(name) << text; }
  Grid grid() const { return Grid(cfg.domain); }
  FieldSpec field() const { return make_field(cfg.field); }
};

std::string point_text(const Vec3& p) {
  return "(" + format_double(p.x) + ", " + format_double(p.y) + ", " + format_double(p.z) + ")";
}

int classify(const Context& c) {
  const auto r = classify_field(c.field(), c.grid(), c.cfg.poincare.tau_h);
  KeyValues kv;
  kv.add("field", c.field().name())
      .add("classification", to_string(r.classification))
      .add("inf_abs_h", r.inf_abs_h)
      .add("sup_abs_h", r.sup_abs_h)
      .add("tau_h", c.cfg.poincare.tau_h)
      .add("min_w", r.min_w)
      .add("max_w", r.max_w)
      .add("near_null", r.near_null);
  c.write("classify.txt", kv.text());
  c.log << "classification: " << to_string(r.classification) << (r.near_null ? " (near-null field)" : "") << '\n';
  return kExitOk;
}

int tangency(const Context& c) {
  const auto faces = tangency_report(c.field(), c.grid());
  auto os = c.open("tangency.csv");
  os << "axis,side,max_normal_component,worst_x,worst_y,worst_z,undefined_points,pass\n";
  std::string failed;
  for (const auto& f : faces) {
    const std::string face = std::string(1, "xyz"[f.axis]) + (f.upper ? "-upper" : "-lower");
    os << "xyz"[f.axis] << ',' << (f.upper ? "upper" : "lower") << ',' << format_double(f.max_normal_component) << ','
       << format_double(f.worst_point.x) << ',' << format_double(f.worst_point.y) << ','
       << format_double(f.worst_point.z) << ',' << f.undefined_points << ',' << (f.pass ? "true" : "false") << '\n';
    if (!f.pass && failed.empty())
      failed = face + ": max |n.w_hat| = " + format_double(f.max_normal_component) + " at " + point_text(f.worst_point);
  }
  os.close();
  if (faces.empty()) c.log << "tangency: no Dirichlet walls\n";
  if (!failed.empty()) throw NumericalFailure("tangency violated on face " + failed);
  c.log << "tangency: all walls pass\n";
  return kExitOk;
}

APerpInputs aperp_inputs(const RunConfig& cfg) {
  APerpInputs in;
  in.origin = cfg.poincare.origin;
  in.tau_h = cfg.poincare.tau_h;
  if (!cfg.poincare.phi.empty())
    in.clebsch = std::array<expr::Expression, 3>{expr::parse(cfg.poincare.phi), expr::parse(cfg.poincare.psi),
                                                 expr::parse(cfg.poincare.theta)};
  return in;
}

int poincare(const Context& c) {
  const auto& pc = c.cfg.poincare;
  const FieldSpec f = c.field();
  const Grid g = c.grid();
  const auto kind = *aperp_kind_from_string(pc.construction);
  const auto report = poincare_report(f, build_aperp(kind, f, g, aperp_inputs(c.cfg)), g, pc.tau_h);
  std::ostringstream kv;
  write_key_values(kv, report);
  {
    auto os = c.open("poincare.csv");
    write_csv(os, report);
  }
  c.log << "C_corollary = " << format_double(report.c_corollary) << ", C_theorem = " << format_double(report.c_theorem)
        << '\n';
  if (!pc.verify_bound) {
    c.write("poincare.txt", kv.str());
    return kExitOk;
  }
  const auto op = assemble_perp_laplacian(f, g, c.cfg.field.w_min);
  const auto v = verify_bound(report, op.matrix, pc.slack);
  KeyValues b;
  b.add("slack", pc.slack)
      .add("lambda_min", v.lambda_min)
      .add("lambda_residual", v.lambda_residual)
      .add("eigen_converged", v.eigen_converged)
      .add("corollary_c_squared", v.corollary.c_squared)
      .add("corollary_threshold", v.corollary.threshold)
      .add("corollary_margin", v.corollary.margin)
      .add("corollary_pass", v.corollary.pass)
      .add("theorem_c_squared", v.theorem.c_squared)
      .add("theorem_threshold", v.theorem.threshold)
      .add("theorem_margin", v.theorem.margin)
      .add("theorem_pass", v.theorem.pass)
      .add("bound_pass", v.pass);
  c.write("poincare.txt", kv.str() + b.text());
  c.log << "lambda_min = " << format_double(v.lambda_min) << (v.pass ? " satisfies" : " violates")
        << " the bound\n";
  if (!v.eigen_converged) throw NumericalFailure("eigen-solver did not converge for lambda_min");
  if (!v.pass)
    throw NumericalFailure("bound check failed: lambda_min = " + format_double(v.lambda_min) + " below " +
                           format_double(std::max(v.corollary.threshold, v.theorem.threshold)));
  return kExitOk;
}

CgOptions cg_options(const RunConfig& cfg) {
  CgOptions o;
  o.tol = cfg.solver.tol;
  o.max_iter = cfg.solver.max_iter;
  o.jacobi = cfg.solver.jacobi;
  return o;
}

int solve(const Context& c) {
  const Grid g = c.grid();
  const FieldSpec f = c.field();
  const auto op = assemble_perp_laplacian(f, g, c.cfg.field.w_min);
  // Lap_perp u = phi  <=>  K u = -phi
  GridScalar rhs = sample_expression(expr::parse(c.cfg.problem.rhs), g);
  for (auto& v : rhs.values) v = -v;
  const auto sol = solve_perp_poisson(op, rhs, cg_options(c.cfg));
  write_olap((c.out / "solution.olap").string(), sol.u);
  {
    auto os = c.open("residual_history.csv");
    write_history_csv(os, sol.stats);
  }
  KeyValues kv;
  kv.add("field", f.name())
      .add("cells", g.size())
      .add("iterations", sol.stats.iterations)
      .add("residual_norm", sol.stats.residual_norm)
      .add("rhs_norm", sol.stats.rhs_norm)
      .add("converged", sol.stats.converged)
      .add("deflated_constants", !g.has_dirichlet())
      .add("incompatible_rhs", sol.stats.incompatible_rhs)
      .add("projected_out", sol.stats.projected_out);
  double max_abs = 0.0;
  for (double v : sol.u.values) max_abs = std::max(max_abs, std::abs(v));
  kv.add("max_abs_u", max_abs);
  if (c.cfg.problem.exact) {
    const auto e = solution_error(sol.u, expr::parse(*c.cfg.problem.exact), !g.has_dirichlet());
    kv.add("l2_error", e.l2).add("linf_error", e.linf);
  }
  c.write("solve.txt", kv.text());
  c.log << "solve: " << sol.stats.iterations << " iterations, residual " << format_double(sol.stats.residual_norm)
        << '\n';
  if (sol.stats.incompatible_rhs)
    throw NumericalFailure("right-hand side is not orthogonal to the kernel (projected out " +
                           format_double(sol.stats.projected_out) + ")");
  if (!sol.stats.converged)
    throw NumericalFailure("CG did not reach tol " + format_double(c.cfg.solver.tol) + " within " +
                           std::to_string(c.cfg.solver.max_iter) + " iterations");
  return kExitOk;
}

int spectrum(const Context& c) {
  const auto op = assemble_perp_laplacian(c.field(), c.grid(), c.cfg.field.w_min);
  EigOptions eo;
  eo.tol = c.cfg.spectrum.tol;
  const auto null = nullspace_dim(op.matrix, std::nullopt, 4, c.cfg.spectrum.max_k, eo);
  const std::size_t k = std::min(c.cfg.spectrum.k, op.grid.size());
  const SpectrumReport s =
      null.spectrum.eigenvalues.size() >= k ? null.spectrum : smallest_eigs(op.matrix, k, eo);
  {
    auto os = c.open("spectrum.csv");
    os << "index,eigenvalue,residual,converged\n";
    for (std::size_t i = 0; i < k; ++i)
      os << i << ',' << format_double(s.eigenvalues[i]) << ',' << format_double(s.residuals[i]) << ','
         << (s.converged[i] ? "true" : "false") << '\n';
  }
  KeyValues kv;
  kv.add("field", c.field().name())
      .add("k", k)
      .add("nullspace_dimension", null.dimension ? std::to_string(*null.dimension) : std::string("undetermined"))
      .add("threshold", null.threshold)
      .add("gap_ratio", null.gap_ratio)
      .add("k_used", null.k_used);
  if (!null.note.empty()) kv.add("note", null.note);
  c.write("spectrum.txt", kv.text());
  c.log << "nullspace dimension: " << (null.dimension ? std::to_string(*null.dimension) : "undetermined") << '\n';
  bool all = true;
  for (std::size_t i = 0; i < k; ++i) all = all && s.converged[i];
  if (!all) throw NumericalFailure("eigen-solver did not converge for all requested eigenpairs");
  if (!null.dimension) throw NumericalFailure("nullspace dimension undetermined: " + null.note);
  return kExitOk;
}

GridScalar initial_density(const RunConfig& cfg, const Grid& g) {
  const auto& e = cfg.evolve;
  if (e.initial == "blob") return gaussian_blob(g, e.blob_center.value_or(g.center_of_box()), e.blob_sigma);
  if (e.initial == "uniform") return normalize_density(GridScalar(g, 1.0));
  return normalize_density(sample_expression(expr::parse(e.initial), g));
}

EvolutionConfig evolution_config(const RunConfig& cfg, const Grid& g, const FieldSpec& f) {
  EvolutionConfig e;
  e.scheme = *time_scheme_from_string(cfg.evolve.scheme);
  e.dt = cfg.evolve.dt;
  e.T = cfg.evolve.T;
  e.stride = cfg.evolve.stride;
  e.leaf_axis = cfg.evolve.leaf_axis;
  e.solver_tol = cfg.evolve.solver_tol;
  e.max_iter = cfg.solver.max_iter;
  if (e.scheme == TimeScheme::ExplicitRk2) e.explicit_dt_limit = cfl_dt(g, f);
  return e;
}

int evolve_cmd(const Context& c) {
  const Grid g = c.grid();
  const FieldSpec f = c.field();
  const auto L = assemble_fpe_generator(f, g, c.cfg.field.w_min);
  const auto run = evolve(initial_density(c.cfg, g), L, evolution_config(c.cfg, g, f));
  {
    auto os = c.open("diagnostics.csv");
    write_diagnostics_csv(os, run.series);
  }
  if (!run.snapshots.empty()) write_snapshots((c.out / "snapshots").string(), run.snapshots);
  write_olap((c.out / "final.olap").string(), run.final_state);
  const auto& a = run.series.front();
  const auto& b = run.series.back();
  double drift = 0.0, leaf_drift = 0.0;
  for (const auto& d : run.series) {
    drift = std::max(drift, std::abs(d.mass - a.mass));
    for (std::size_t l = 0; l < d.leaf_mass.size(); ++l)
      leaf_drift = std::max(leaf_drift, std::abs(d.leaf_mass[l] - a.leaf_mass[l]));
  }
  KeyValues kv;
  kv.add("field", f.name())
      .add("scheme", c.cfg.evolve.scheme)
      .add("boundary_condition", g.fully_periodic() ? "periodic" : "zero normal flux on walls")
      .add("steps", run.steps)
      .add("dt", run.dt)
      .add("cfl_dt", cfl_dt(g, f))
      .add("generator_asymmetry", L.relative_asymmetry)
      .add("normal_equations", run.normal_equations)
      .add("solver_iterations", run.solver_iterations)
      .add("initial_variance", a.variance)
      .add("final_variance", b.variance)
      .add("variance_ratio", a.variance > 0.0 ? b.variance / a.variance : 0.0)
      .add("max_mass_drift", drift);
  if (c.cfg.evolve.leaf_axis) {
    kv.add("max_leaf_mass_drift", leaf_drift)
        .add("initial_in_leaf_variance", a.in_leaf_variance)
        .add("final_in_leaf_variance", b.in_leaf_variance);
  }
  c.write("evolve.txt", kv.text());
  c.log << "evolve: " << run.steps << " steps, variance ratio "
        << format_double(a.variance > 0.0 ? b.variance / a.variance : 0.0) << '\n';
  return kExitOk;
}

int mc(const Context& c) {
  const auto& m = c.cfg.mc;
  const Grid g = c.grid();
  const FieldSpec f = c.field();
  if (!g.fully_periodic()) throw InvalidConfig("[domain] mc requires periodic bc on every axis");
  std::vector<SdeScheme> schemes;
  if (m.scheme == "both") schemes = {SdeScheme::ItoEuler, SdeScheme::StratonovichHeun};
  else schemes = {*sde_scheme_from_string(m.scheme)};
  const GridScalar u0 = initial_density(c.cfg, g);

  std::vector<Ensemble> ensembles;
  std::vector<GridScalar> hists;
  std::optional<GridScalar> pde;
  std::vector<std::pair<std::string, Discrepancy>> rows;
  double noise = 0.0;
  if (m.compare_pde) {
    EvolutionConfig e = evolution_config(c.cfg, g, f);
    e.T = m.T;
    e.stride = 0;
    e.leaf_axis.reset();
    auto cv = cross_validate(f, u0, e, m.N, m.dt, m.seed, schemes, m.bins, c.cfg.field.w_min);
    ensembles = std::move(cv.ensembles);
    hists = std::move(cv.histograms);
    for (std::size_t i = 0; i < schemes.size(); ++i) rows.push_back({to_string(schemes[i]) + "_vs_pde", cv.vs_pde[i]});
    noise = cv.noise;
    pde = std::move(cv.pde);
  } else {
    for (std::size_t i = 0; i < schemes.size(); ++i) {
      const std::uint64_t s = m.seed + i;
      ensembles.push_back(simulate(f, g, sample_particles(u0, m.N, s), m.dt, m.T, s, schemes[i]));
      hists.push_back(histogram(ensembles.back(), m.bins));
    }
    noise = expected_l1_noise(hists.front(), m.N);
  }
  if (hists.size() == 2) rows.push_back({"ito_euler_vs_stratonovich_heun", compare(hists[0], hists[1])});

  for (std::size_t i = 0; i < schemes.size(); ++i) {
    write_oens((c.out / ("ensemble_" + to_string(schemes[i]) + ".oens")).string(), ensembles[i].positions);
    write_olap((c.out / ("histogram_" + to_string(schemes[i]) + ".olap")).string(), hists[i]);
  }
  if (pde) write_olap((c.out / "pde_binned.olap").string(), *pde);
  {
    auto os = c.open("compare.csv");
    write_compare_csv(os, rows);
  }
  KeyValues kv;
  kv.add("field", f.name())
      .add("particles", m.N)
      .add("steps", ensembles.front().steps)
      .add("dt", ensembles.front().dt)
      .add("T", m.T)
      .add("bins", m.bins)
      .add("expected_l1_noise", noise)
      .add("pair_noise", std::sqrt(2.0) * noise);
  for (const auto& [name, d] : rows) kv.add(name + "_l1", d.l1);
  if (pde && schemes.size() == 2) {
    const bool strat = rows[1].second.l1 < rows[0].second.l1;
    kv.add("closest_scheme", to_string(schemes[strat ? 1 : 0]));
  }
  c.write("mc.txt", kv.text());
  for (const auto& [name, d] : rows) c.log << name << ": l1 = " << format_double(d.l1) << '\n';
  return kExitOk;
}

int convergence(const Context& c) {
  if (!c.cfg.problem.exact) throw InvalidConfig("[problem] exact is required for the convergence study");
  const auto study = manufactured_convergence(c.field(), expr::parse(*c.cfg.problem.exact), c.cfg.domain,
                                              c.cfg.convergence.grids, c.cfg.convergence.fine_factor,
                                              cg_options(c.cfg), c.cfg.field.w_min);
  {
    auto os = c.open("convergence.csv");
    os << "cells,h,l2_error,linf_error,iterations,converged,l2_order\n";
    for (std::size_t i = 0; i < study.levels.size(); ++i) {
      const auto& l = study.levels[i];
      os << l.cells << ',' << format_double(l.h) << ',' << format_double(l.error.l2) << ','
         << format_double(l.error.linf) << ',' << l.stats.iterations << ',' << (l.stats.converged ? "true" : "false")
         << ',' << (i ? format_double(study.l2_orders[i - 1]) : "") << '\n';
    }
  }
  std::size_t max_iterations = 0;
  bool converged = true;
  for (const auto& l : study.levels) {
    max_iterations = std::max(max_iterations, l.stats.iterations);
    converged = converged && l.stats.converged;
  }
  KeyValues kv;
  kv.add("field", c.field().name())
      .add("exact", *c.cfg.problem.exact)
      .add("fine_factor", c.cfg.convergence.fine_factor)
      .add("min_l2_order", study.min_order())
      .add("max_iterations", max_iterations)
      .add("all_converged", converged);
  c.write("convergence.txt", kv.text());
  c.log << "convergence: minimum L2 order " << format_double(study.min_order()) << '\n';
  if (!converged) throw NumericalFailure("CG did not converge on every grid of the study");
  return kExitOk;
}

const std::map<std::string, std::function<int(const Context&)>>& table() {
  static const std::map<std::string, std::function<int(const Context&)>> t{
      {"classify", classify}, {"tangency", tangency}, {"poincare", poincare}, {"solve", solve},
      {"spectrum", spectrum}, {"evolve", evolve_cmd}, {"mc", mc},             {"convergence", convergence}};
  return t;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"classify", "tangency", "poincare", "solve",
                                              "spectrum", "evolve",   "mc",       "convergence"};
  return names;
}

void write_metadata(const std::string& path, const RunConfig& config, const std::string& command) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  os << "# olap " << kToolkitVersion << "\n# command = " << command << "\n# created = " << stamp << "\n\n"
     << to_toml(config);
}

int run_command(const std::string& name, const RunConfig& config, const std::string& out_dir, std::ostream& out,
                std::ostream& err) {
  const auto it = table().find(name);
  if (it == table().end()) {
    err << "error: unknown command '" << name << "'\n";
    return kExitConfig;
  }
  try {
    validate(config);
    fs::create_directories(out_dir);
    write_metadata((fs::path(out_dir) / "metadata.toml").string(), config, name);
    return it->second(Context{config, fs::path(out_dir), out});
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const EvolutionFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const PreconditionViolation& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NearNullField& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidConfig& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const toml::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const expr::SyntaxError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const expr::DomainError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace olap
