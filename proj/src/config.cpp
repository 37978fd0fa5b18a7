#include "olap/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "olap/diffusion.hpp"
#include "olap/montecarlo.hpp"
#include "olap/poincare.hpp"
#include "olap/text.hpp"
#include "olap/toml.hpp"

namespace olap {

double constant_expression(const std::string& text) {
  try {
    const double v = expr::parse(text).evaluate({0.0, 0.0, 0.0});
    if (!std::isfinite(v)) throw InvalidConfig("'" + text + "' is not finite");
    if (text.find_first_of("xyz") != std::string::npos)
      throw InvalidConfig("'" + text + "' must not depend on x, y or z");
    return v;
  } catch (const expr::SyntaxError& e) {
    throw InvalidConfig("'" + text + "': " + e.what());
  } catch (const expr::DomainError& e) {
    throw InvalidConfig("'" + text + "': " + e.what());
  }
}

namespace {

int parse_axis(const std::string& s, const std::string& where) {
  if (s == "x" || s == "0") return 0;
  if (s == "y" || s == "1") return 1;
  if (s == "z" || s == "2") return 2;
  throw InvalidConfig(where + ": axis must be x, y, z or 0, 1, 2");
}

class TableReader {
 public:
  TableReader(const toml::Document& doc, const std::string& name) : name_(name) {
    const auto it = doc.find(name);
    if (it != doc.end()) table_ = &it->second;
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_)
      if (!used_.count(k))
        throw InvalidConfig("unknown key '" + k + "' in [" + name_ + "] (line " + std::to_string(v.line) + ")");
  }

  bool has(const std::string& key) const { return table_ && table_->count(key); }

  void reject(const std::string& key, const std::string& why) {
    if (has(key)) throw InvalidConfig(where(key) + " " + why);
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = get(key)) out = as_number(*v, key);
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const auto* v = get(key)) out = as_integer<Int>(*v, key);
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = get(key)) out = as_string(*v, key);
  }

  void optional_string(const std::string& key, std::optional<std::string>& out) {
    if (const auto* v = get(key)) out = as_string(*v, key);
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* v = get(key)) {
      if (!std::holds_alternative<bool>(v->data)) throw InvalidConfig(where(key) + " must be true or false");
      out = std::get<bool>(v->data);
    }
  }

  void axis(const std::string& key, int& out) {
    if (const auto* v = get(key)) out = as_axis(*v, key);
  }

  void optional_axis(const std::string& key, std::optional<int>& out) {
    if (const auto* v = get(key)) out = as_axis(*v, key);
  }

  void vec3(const std::string& key, std::optional<Vec3>& out) {
    if (const auto* v = get(key)) {
      const auto a = triple(*v, key);
      out = Vec3{as_number(a[0], key), as_number(a[1], key), as_number(a[2], key)};
    }
  }

  // A scalar applies to all three axes.
  template <class F>
  void per_axis(const std::string& key, F&& set) {
    const auto* v = get(key);
    if (!v) return;
    if (!v->is_array()) {
      for (int a = 0; a < 3; ++a) set(a, *v);
      return;
    }
    const auto t = triple(*v, key);
    for (int a = 0; a < 3; ++a) set(a, t[static_cast<std::size_t>(a)]);
  }

  template <class Int>
  void integer_list(const std::string& key, std::vector<Int>& out) {
    const auto* v = get(key);
    if (!v) return;
    if (!v->is_array()) throw InvalidConfig(where(key) + " must be an array of integers");
    out.clear();
    for (const auto& e : std::get<toml::Array>(v->data)) out.push_back(as_integer<Int>(e, key));
  }

  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

  double as_number(const toml::Value& v, const std::string& key) const {
    if (std::holds_alternative<double>(v.data)) return std::get<double>(v.data);
    if (std::holds_alternative<std::int64_t>(v.data)) return static_cast<double>(std::get<std::int64_t>(v.data));
    if (v.is_string()) return constant_expression(std::get<std::string>(v.data));
    throw InvalidConfig(where(key) + " must be a number");
  }

  template <class Int>
  Int as_integer(const toml::Value& v, const std::string& key) const {
    if (!std::holds_alternative<std::int64_t>(v.data)) throw InvalidConfig(where(key) + " must be an integer");
    const std::int64_t i = std::get<std::int64_t>(v.data);
    if constexpr (std::is_unsigned_v<Int>)
      if (i < 0) throw InvalidConfig(where(key) + " must be nonnegative");
    return static_cast<Int>(i);
  }

  std::string as_string(const toml::Value& v, const std::string& key) const {
    if (!v.is_string()) throw InvalidConfig(where(key) + " must be a string");
    return std::get<std::string>(v.data);
  }

 private:
  const toml::Table* table_ = nullptr;
  std::string name_;
  std::set<std::string> used_;

  const toml::Value* get(const std::string& key) {
    if (!has(key)) return nullptr;
    used_.insert(key);
    return &table_->at(key);
  }

  int as_axis(const toml::Value& v, const std::string& key) const {
    if (std::holds_alternative<std::int64_t>(v.data))
      return parse_axis(std::to_string(std::get<std::int64_t>(v.data)), where(key));
    return parse_axis(as_string(v, key), where(key));
  }

  const toml::Array& triple(const toml::Value& v, const std::string& key) const {
    if (!v.is_array() || std::get<toml::Array>(v.data).size() != 3)
      throw InvalidConfig(where(key) + " must have three entries");
    return std::get<toml::Array>(v.data);
  }
};

const std::set<std::string> kTables{"", "domain", "field", "problem", "solver", "spectrum",
                                    "poincare", "evolve", "mc", "convergence"};

void read_field(TableReader& r, FieldConfig& f) {
  r.string("kind", f.kind);
  const std::set<std::string> all{"axis", "alpha", "a", "b", "c", "phi", "psi", "theta", "wx", "wy", "wz"};
  std::set<std::string> allowed;
  if (f.kind == "grad_axis") allowed = {"axis"};
  else if (f.kind == "rotating_shear") allowed = {"alpha"};
  else if (f.kind == "abc") allowed = {"a", "b", "c"};
  else if (f.kind == "clebsch") allowed = {"phi", "psi", "theta"};
  else if (f.kind == "custom") allowed = {"wx", "wy", "wz"};
  else if (f.kind != "linear_shear") throw InvalidConfig("[field] kind '" + f.kind + "' is not a known field");
  for (const auto& k : all)
    if (!allowed.count(k)) r.reject(k, "does not apply to field kind '" + f.kind + "'");
  r.axis("axis", f.axis);
  r.number("alpha", f.alpha);
  r.number("a", f.a);
  r.number("b", f.b);
  r.number("c", f.c);
  r.string("phi", f.phi);
  r.string("psi", f.psi);
  r.string("theta", f.theta);
  r.string("wx", f.wx);
  r.string("wy", f.wy);
  r.string("wz", f.wz);
  r.number("fd_step", f.fd_step);
  r.number("w_min", f.w_min);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidConfig(message);
}

void check_expression(const std::string& text, const std::string& where) {
  try {
    (void)expr::parse(text);
  } catch (const expr::SyntaxError& e) {
    throw InvalidConfig(where + ": " + e.what());
  }
}

}  // namespace

void validate(const RunConfig& c) {
  (void)Grid(c.domain);
  const auto& f = c.field;
  require(f.fd_step > 0.0, "[field] fd_step must be positive");
  require(f.w_min > 0.0, "[field] w_min must be positive");
  if (f.kind == "clebsch") {
    require(!f.phi.empty() && !f.psi.empty() && !f.theta.empty(), "[field] clebsch needs phi, psi and theta");
    check_expression(f.phi, "[field] phi");
    check_expression(f.psi, "[field] psi");
    check_expression(f.theta, "[field] theta");
  }
  if (f.kind == "custom") {
    require(!f.wx.empty() && !f.wy.empty() && !f.wz.empty(), "[field] custom needs wx, wy and wz");
    check_expression(f.wx, "[field] wx");
    check_expression(f.wy, "[field] wy");
    check_expression(f.wz, "[field] wz");
  }
  (void)make_field(f);
  check_expression(c.problem.rhs, "[problem] rhs");
  if (c.problem.exact) check_expression(*c.problem.exact, "[problem] exact");
  require(c.solver.tol > 0.0, "[solver] tol must be positive");
  require(c.solver.max_iter > 0, "[solver] max_iter must be positive");
  require(c.spectrum.k > 0 && c.spectrum.k <= c.spectrum.max_k, "[spectrum] need 0 < k <= max_k");
  require(c.spectrum.tol >= 0.0, "[spectrum] tol must be nonnegative");
  require(aperp_kind_from_string(c.poincare.construction).has_value(),
          "[poincare] construction '" + c.poincare.construction + "' is not known");
  const auto& p = c.poincare;
  const int given = !p.phi.empty() + !p.psi.empty() + !p.theta.empty();
  require(given == 0 || given == 3, "[poincare] give all of phi, psi, theta or none");
  require(p.tau_h > 0.0, "[poincare] tau_h must be positive");
  require(p.slack >= 0.0 && p.slack < 1.0, "[poincare] slack must be in [0, 1)");
  const auto& e = c.evolve;
  require(time_scheme_from_string(e.scheme).has_value(), "[evolve] scheme must be rk2 or implicit_euler");
  require(e.dt > 0.0 && e.T > 0.0, "[evolve] dt and T must be positive");
  require(e.blob_sigma > 0.0, "[evolve] blob_sigma must be positive");
  require(e.solver_tol > 0.0, "[evolve] solver_tol must be positive");
  if (e.initial != "blob" && e.initial != "uniform") check_expression(e.initial, "[evolve] initial");
  const auto& m = c.mc;
  require(m.N > 0, "[mc] N must be positive");
  require(m.dt > 0.0 && m.T > 0.0, "[mc] dt and T must be positive");
  require(m.scheme == "both" || sde_scheme_from_string(m.scheme).has_value(),
          "[mc] scheme must be ito_euler, stratonovich_heun or both");
  require(m.bins > 0, "[mc] bins must be positive");
  require(c.convergence.grids.size() >= 2, "[convergence] grids needs at least two resolutions");
  for (int n : c.convergence.grids) require(n > 0, "[convergence] grid sizes must be positive");
  require(c.convergence.fine_factor >= 2, "[convergence] fine_factor must be at least 2");
}

RunConfig parse_config(const std::string& text) {
  const toml::Document doc = toml::parse(text);
  for (const auto& [name, table] : doc) {
    if (!kTables.count(name)) throw InvalidConfig("unknown table [" + name + "]");
    if (name.empty() && !table.empty())
      throw InvalidConfig("key '" + table.begin()->first + "' must live inside a table (line " +
                          std::to_string(table.begin()->second.line) + ")");
  }
  RunConfig c;
  {
    TableReader r(doc, "domain");
    r.per_axis("cells", [&](int a, const toml::Value& v) { c.domain.cells[a] = r.as_integer<int>(v, "cells"); });
    r.per_axis("extent", [&](int a, const toml::Value& v) {
      const double x = r.as_number(v, "extent");
      (a == 0 ? c.domain.extent.x : a == 1 ? c.domain.extent.y : c.domain.extent.z) = x;
    });
    r.per_axis("bc", [&](int a, const toml::Value& v) {
      const std::string s = r.as_string(v, "bc");
      if (s == "periodic") c.domain.bc[a] = Boundary::Periodic;
      else if (s == "dirichlet") c.domain.bc[a] = Boundary::Dirichlet0;
      else throw InvalidConfig("[domain] bc must be periodic or dirichlet");
    });
    std::string origin = "corner";
    r.string("origin", origin);
    if (origin == "corner") c.domain.origin = Origin::Corner;
    else if (origin == "center") c.domain.origin = Origin::Center;
    else throw InvalidConfig("[domain] origin must be corner or center");
    r.finish();
  }
  {
    TableReader r(doc, "field");
    read_field(r, c.field);
    r.finish();
  }
  {
    TableReader r(doc, "problem");
    r.string("rhs", c.problem.rhs);
    r.optional_string("exact", c.problem.exact);
    r.finish();
  }
  {
    TableReader r(doc, "solver");
    r.number("tol", c.solver.tol);
    r.integer("max_iter", c.solver.max_iter);
    r.boolean("jacobi", c.solver.jacobi);
    r.finish();
  }
  {
    TableReader r(doc, "spectrum");
    r.integer("k", c.spectrum.k);
    r.integer("max_k", c.spectrum.max_k);
    r.number("tol", c.spectrum.tol);
    r.finish();
  }
  {
    TableReader r(doc, "poincare");
    r.string("construction", c.poincare.construction);
    r.vec3("origin", c.poincare.origin);
    r.string("phi", c.poincare.phi);
    r.string("psi", c.poincare.psi);
    r.string("theta", c.poincare.theta);
    r.number("tau_h", c.poincare.tau_h);
    r.number("slack", c.poincare.slack);
    r.boolean("verify_bound", c.poincare.verify_bound);
    r.finish();
  }
  {
    TableReader r(doc, "evolve");
    r.string("scheme", c.evolve.scheme);
    r.number("dt", c.evolve.dt);
    r.number("T", c.evolve.T);
    r.integer("stride", c.evolve.stride);
    r.optional_axis("leaf_axis", c.evolve.leaf_axis);
    r.string("initial", c.evolve.initial);
    r.number("blob_sigma", c.evolve.blob_sigma);
    r.vec3("blob_center", c.evolve.blob_center);
    r.number("solver_tol", c.evolve.solver_tol);
    r.finish();
  }
  {
    TableReader r(doc, "mc");
    r.integer("N", c.mc.N);
    r.number("dt", c.mc.dt);
    r.number("T", c.mc.T);
    r.integer("seed", c.mc.seed);
    r.string("scheme", c.mc.scheme);
    r.integer("bins", c.mc.bins);
    r.boolean("compare_pde", c.mc.compare_pde);
    r.finish();
  }
  {
    TableReader r(doc, "convergence");
    r.integer_list("grids", c.convergence.grids);
    r.integer("fine_factor", c.convergence.fine_factor);
    r.finish();
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidConfig("cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + '"';
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string s = format_double(v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string vec(const Vec3& v) { return "[" + num(v.x) + ", " + num(v.y) + ", " + num(v.z) + "]"; }

}  // namespace

std::string to_toml(const RunConfig& c) {
  std::ostringstream os;
  const auto& d = c.domain;
  auto bc = [&](int a) { return std::string(d.bc[a] == Boundary::Periodic ? "\"periodic\"" : "\"dirichlet\""); };
  os << "[domain]\n"
     << "cells = [" << d.cells[0] << ", " << d.cells[1] << ", " << d.cells[2] << "]\n"
     << "extent = " << vec(d.extent) << '\n'
     << "origin = " << (d.origin == Origin::Corner ? "\"corner\"" : "\"center\"") << '\n'
     << "bc = [" << bc(0) << ", " << bc(1) << ", " << bc(2) << "]\n\n";

  const auto& f = c.field;
  os << "[field]\nkind = " << quoted(f.kind) << '\n';
  if (f.kind == "grad_axis") os << "axis = " << f.axis << '\n';
  if (f.kind == "rotating_shear") os << "alpha = " << num(f.alpha) << '\n';
  if (f.kind == "abc") os << "a = " << num(f.a) << "\nb = " << num(f.b) << "\nc = " << num(f.c) << '\n';
  if (f.kind == "clebsch")
    os << "phi = " << quoted(f.phi) << "\npsi = " << quoted(f.psi) << "\ntheta = " << quoted(f.theta) << '\n';
  if (f.kind == "custom")
    os << "wx = " << quoted(f.wx) << "\nwy = " << quoted(f.wy) << "\nwz = " << quoted(f.wz) << '\n';
  os << "fd_step = " << num(f.fd_step) << "\nw_min = " << num(f.w_min) << "\n\n";

  os << "[problem]\nrhs = " << quoted(c.problem.rhs) << '\n';
  if (c.problem.exact) os << "exact = " << quoted(*c.problem.exact) << '\n';
  os << "\n[solver]\ntol = " << num(c.solver.tol) << "\nmax_iter = " << c.solver.max_iter
     << "\njacobi = " << (c.solver.jacobi ? "true" : "false") << "\n\n";
  os << "[spectrum]\nk = " << c.spectrum.k << "\nmax_k = " << c.spectrum.max_k << "\ntol = " << num(c.spectrum.tol)
     << "\n\n";

  const auto& p = c.poincare;
  os << "[poincare]\nconstruction = " << quoted(p.construction) << '\n';
  if (p.origin) os << "origin = " << vec(*p.origin) << '\n';
  if (!p.phi.empty())
    os << "phi = " << quoted(p.phi) << "\npsi = " << quoted(p.psi) << "\ntheta = " << quoted(p.theta) << '\n';
  os << "tau_h = " << num(p.tau_h) << "\nslack = " << num(p.slack)
     << "\nverify_bound = " << (p.verify_bound ? "true" : "false") << "\n\n";

  const auto& e = c.evolve;
  os << "[evolve]\nscheme = " << quoted(e.scheme) << "\ndt = " << num(e.dt) << "\nT = " << num(e.T)
     << "\nstride = " << e.stride << '\n';
  if (e.leaf_axis) os << "leaf_axis = " << *e.leaf_axis << '\n';
  os << "initial = " << quoted(e.initial) << "\nblob_sigma = " << num(e.blob_sigma) << '\n';
  if (e.blob_center) os << "blob_center = " << vec(*e.blob_center) << '\n';
  os << "solver_tol = " << num(e.solver_tol) << "\n\n";

  const auto& m = c.mc;
  os << "[mc]\nN = " << m.N << "\ndt = " << num(m.dt) << "\nT = " << num(m.T) << "\nseed = " << m.seed
     << "\nscheme = " << quoted(m.scheme) << "\nbins = " << m.bins
     << "\ncompare_pde = " << (m.compare_pde ? "true" : "false") << "\n\n";

  os << "[convergence]\ngrids = [";
  for (std::size_t i = 0; i < c.convergence.grids.size(); ++i) os << (i ? ", " : "") << c.convergence.grids[i];
  os << "]\nfine_factor = " << c.convergence.fine_factor << '\n';
  return os.str();
}

FieldSpec make_field(const FieldConfig& f) {
  auto e = [](const std::string& s, const char* name) {
    try {
      return expr::parse(s);
    } catch (const expr::SyntaxError& err) {
      throw InvalidConfig(std::string("[field] ") + name + ": " + err.what());
    }
  };
  if (f.kind == "grad_axis") return FieldSpec::grad_axis(f.axis);
  if (f.kind == "linear_shear") return FieldSpec::linear_shear();
  if (f.kind == "rotating_shear") return FieldSpec::rotating_shear(f.alpha);
  if (f.kind == "abc") return FieldSpec::abc(f.a, f.b, f.c);
  if (f.kind == "clebsch")
    return FieldSpec::clebsch(e(f.phi, "phi"), e(f.psi, "psi"), e(f.theta, "theta"), f.fd_step);
  if (f.kind == "custom") return FieldSpec::custom(e(f.wx, "wx"), e(f.wy, "wy"), e(f.wz, "wz"), f.fd_step);
  throw InvalidConfig("[field] kind '" + f.kind + "' is not a known field");
}

}  // namespace olap
