#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "olap/commands.hpp"
#include "olap/diffusion.hpp"
#include "olap/montecarlo.hpp"
#include "olap/parallel.hpp"
#include "olap/toml.hpp"

using namespace olap;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("olap_cli_" + name);
  fs::remove_all(d);
  return d;
}

int run(const std::string& cmd, const RunConfig& c, const fs::path& out, std::string* err_text = nullptr) {
  std::ostringstream out_s, err_s;
  const int code = run_command(cmd, c, out.string(), out_s, err_s);
  if (err_text) *err_text = err_s.str();
  return code;
}

// Parses "a,b,c" lines into rows of strings.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    rows.emplace_back();
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) rows.back().push_back(cell);
  }
  return rows;
}

const char* kBox = R"toml(
[domain]
cells = [8, 8, 8]
extent = 1
bc = "dirichlet"

[field]
kind = "linear_shear"
)toml";

}  // namespace

TEST_CASE("TOML subset") {
  const auto d = toml::parse(R"toml(# leading comment
[a]
int = -42
float = 1.5e-3   # trailing comment
big = 1_000
flag = true
s = "quote \" and \\ and\ttab"
lit = 'C:\path'
arr = [1, 2.5,
       "three",   # inside
       [4]]
inf = -inf
[b]
"quoted key" = false
)toml");
  const auto& a = d.at("a");
  CHECK(std::get<std::int64_t>(a.at("int").data) == -42);
  CHECK(std::get<double>(a.at("float").data) == 1.5e-3);
  CHECK(std::get<std::int64_t>(a.at("big").data) == 1000);
  CHECK(std::get<bool>(a.at("flag").data));
  CHECK(std::get<std::string>(a.at("s").data) == "quote \" and \\ and\ttab");
  CHECK(std::get<std::string>(a.at("lit").data) == "C:\\path");
  const auto& arr = std::get<toml::Array>(a.at("arr").data);
  REQUIRE(arr.size() == 4);
  CHECK(std::get<std::string>(arr[2].data) == "three");
  CHECK(std::get<double>(a.at("inf").data) == -INFINITY);
  CHECK(a.at("arr").line == 9);
  CHECK_FALSE(std::get<bool>(d.at("b").at("quoted key").data));

  auto line_of = [](const char* text) {
    try {
      toml::parse(text);
    } catch (const toml::ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("[a]\nx = 1\nx = 2\n") == 3);
  CHECK(line_of("[a]\n[a]\n") == 2);
  CHECK(line_of("[a]\nx = \"open\n") == 2);
  CHECK(line_of("[a]\nx = 1 2\n") == 2);
  CHECK(line_of("[a]\nx = [1 2]\n") == 2);
  CHECK(line_of("[a]\nx = 1__0\n") == 2);
  CHECK(line_of("[a]\nx = 1.\n") == 2);
  CHECK(line_of("[a]\nx =\n") == 2);
}

TEST_CASE("configuration mapping") {
  const RunConfig c = parse_config(R"toml(
[domain]
cells = [4, 6, 8]
extent = ["2*pi", 1, 2.5]
origin = "center"
bc = ["periodic", "dirichlet", "dirichlet"]
[field]
kind = "custom"
wx = "1"
wy = "z"
wz = "0.3*x"
[evolve]
leaf_axis = "y"
blob_center = [0, 0, 0]
[mc]
seed = 123456789012
)toml");
  CHECK(c.domain.cells == std::array<int, 3>{4, 6, 8});
  CHECK(c.domain.extent.x == doctest::Approx(2 * M_PI));
  CHECK(c.domain.origin == Origin::Center);
  CHECK(c.domain.bc[0] == Boundary::Periodic);
  CHECK(c.domain.bc[2] == Boundary::Dirichlet0);
  CHECK(make_field(c.field).value({1, 2, 3}).z == doctest::Approx(0.3));
  CHECK(c.evolve.leaf_axis == 1);
  CHECK(c.mc.seed == 123456789012ull);

  const RunConfig d = parse_config("");
  CHECK(d.field.kind == "rotating_shear");
  CHECK(d.domain.cells == std::array<int, 3>{16, 16, 16});
}

TEST_CASE("configuration rejects unknown or invalid entries") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const InvalidConfig& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[domain]\ncell = 4\n").find("unknown key 'cell' in [domain] (line 2)") != std::string::npos);
  CHECK(message("[domian]\n").find("unknown table [domian]") != std::string::npos);
  CHECK(message("x = 1\n").find("must live inside a table") != std::string::npos);
  CHECK(message("[field]\nkind = \"abc\"\nalpha = 2\n").find("does not apply") != std::string::npos);
  CHECK(message("[field]\nkind = \"vortex\"\n").find("not a known field") != std::string::npos);
  CHECK(message("[domain]\ncells = -3\n").find("positive") != std::string::npos);
  CHECK(message("[domain]\ncells = [4, 4]\n").find("three entries") != std::string::npos);
  CHECK(message("[domain]\nbc = \"neumann\"\n").find("periodic or dirichlet") != std::string::npos);
  CHECK(message("[solver]\ntol = \"x\"\n").find("must not depend") != std::string::npos);
  CHECK(message("[solver]\nmax_iter = 1.5\n").find("integer") != std::string::npos);
  CHECK(message("[evolve]\nscheme = \"euler\"\n").find("rk2 or implicit_euler") != std::string::npos);
  CHECK(message("[mc]\nscheme = \"milstein\"\n").find("[mc] scheme") != std::string::npos);
  CHECK(message("[poincare]\nconstruction = \"darboux\"\n").find("not known") != std::string::npos);
  CHECK(message("[poincare]\nphi = \"x\"\n").find("phi, psi, theta") != std::string::npos);
  CHECK(message("[field]\nkind = \"custom\"\nwx = \"1\"\nwy = \"(\"\nwz = \"0\"\n").find("[field] wy") !=
        std::string::npos);
  CHECK(message("[convergence]\ngrids = [8]\n").find("two resolutions") != std::string::npos);
  CHECK_THROWS_AS(parse_config("[solver\n"), toml::ParseError);
}

TEST_CASE("resolved configuration round-trips through its echo") {
  RunConfig c = parse_config(std::string(kBox) + "[poincare]\norigin = [0.5, 0.25, 1e-3]\n[problem]\nexact = \"x\"\n");
  c.evolve.leaf_axis = 2;
  c.solver.tol = 1.0 / 3.0;
  const std::string text = to_toml(c);
  CHECK(to_toml(parse_config(text)) == text);
  CHECK(parse_config(text).solver.tol == 1.0 / 3.0);
}

TEST_CASE("solve with a zero datum returns zero") {
  const RunConfig c = parse_config(kBox);
  const auto out = scratch("solve_zero");
  REQUIRE(run("solve", c, out) == kExitOk);
  const auto u = read_olap((out / "solution.olap").string());
  for (double v : u.payload) CHECK(v == 0.0);
  CHECK(slurp(out / "solve.txt").find("converged = true") != std::string::npos);
  const RunConfig echoed = load_config((out / "metadata.toml").string());
  CHECK(to_toml(echoed) == to_toml(c));
  CHECK(slurp(out / "metadata.toml").rfind("# olap 1.0.0\n# command = solve\n# created = ", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("solve recovers a manufactured solution") {
  RunConfig c = parse_config(std::string(kBox) + R"toml(
[problem]
rhs = "-2*pi^2*sin(pi*x)*sin(pi*y)"
exact = "sin(pi*x)*sin(pi*y)"
)toml");
  c.field.kind = "grad_axis";
  c.field.axis = 2;
  const auto out = scratch("solve_mms");
  REQUIRE(run("solve", c, out) == kExitOk);
  const auto kv = slurp(out / "solve.txt");
  const auto at = kv.find("l2_error = ");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(kv.substr(at + 11)) < 0.02);
  const auto hist = csv_rows(slurp(out / "residual_history.csv"));
  CHECK(hist.front() == std::vector<std::string>{"iteration", "residual"});
  CHECK(hist.size() > 2);
  fs::remove_all(out);
}

TEST_CASE("exit codes") {
  RunConfig c = parse_config(std::string(kBox) + "[problem]\nrhs = \"1\"\n[solver]\nmax_iter = 1\n");
  const auto out = scratch("codes");
  std::string err;
  CHECK(run("solve", c, out, &err) == kExitNumerical);
  CHECK(err.find("did not reach tol") != std::string::npos);
  CHECK(run("evaporate", c, out, &err) == kExitConfig);
  CHECK(run("convergence", parse_config(kBox), out, &err) == kExitConfig);
  CHECK(err.find("[problem] exact") != std::string::npos);
  RunConfig torus = parse_config("[domain]\ncells = 4\nbc = \"periodic\"\n[field]\nkind = \"abc\"\n");
  torus.poincare.construction = "beltrami";
  CHECK(run("poincare", torus, out, &err) == kExitConfig);
  CHECK(err.find("without periodic axes") != std::string::npos);
  RunConfig walls = parse_config(kBox);
  CHECK(run("mc", walls, out, &err) == kExitConfig);
  CHECK(run("tangency", walls, out, &err) == kExitNumerical);
  CHECK(err.find("face x-lower") != std::string::npos);
  walls.field.kind = "abc";
  walls.domain.extent = {2 * M_PI, 2 * M_PI, 2 * M_PI};
  walls.domain.cells = {4, 4, 4};
  walls.field.w_min = 10.0;
  CHECK(run("spectrum", walls, out, &err) == kExitConfig);
  fs::remove_all(out);
}

TEST_CASE("classify, tangency and poincare artifacts") {
  RunConfig c = parse_config(R"toml(
[domain]
cells = 8
extent = 1
origin = "center"
bc = "dirichlet"
[field]
kind = "rotating_shear"
[poincare]
construction = "beltrami"
verify_bound = true
)toml");
  const auto out = scratch("poincare");
  REQUIRE(run("classify", c, out) == kExitOk);
  CHECK(slurp(out / "classify.txt").find("classification = non_integrable") != std::string::npos);
  c.field.kind = "grad_axis";
  c.field.axis = 0;
  c.domain.bc = {Boundary::Periodic, Boundary::Dirichlet0, Boundary::Dirichlet0};
  REQUIRE(run("tangency", c, out) == kExitOk);
  const auto rows = csv_rows(slurp(out / "tangency.csv"));
  CHECK(rows.size() == 5);
  c.field.kind = "rotating_shear";
  c.domain.bc = {Boundary::Dirichlet0, Boundary::Dirichlet0, Boundary::Dirichlet0};
  REQUIRE(run("poincare", c, out) == kExitOk);
  const auto kv = slurp(out / "poincare.txt");
  CHECK(kv.find("C_corollary = 1.1547005383792") != std::string::npos);
  CHECK(kv.find("bound_pass = true") != std::string::npos);
  const auto csv = csv_rows(slurp(out / "poincare.csv"));
  CHECK(csv[1][0] == "epsilon");
  CHECK(std::stod(csv[1][1]) == doctest::Approx(1.0));
  fs::remove_all(out);
}

TEST_CASE("spectrum of the layered torus") {
  RunConfig c = parse_config("[domain]\ncells = 6\nextent = \"2*pi\"\n[field]\nkind = \"grad_axis\"\naxis = 2\n");
  c.spectrum.k = 10;
  const auto out = scratch("spectrum");
  REQUIRE(run("spectrum", c, out) == kExitOk);
  CHECK(slurp(out / "spectrum.txt").find("nullspace_dimension = 6\n") != std::string::npos);
  CHECK(csv_rows(slurp(out / "spectrum.csv")).size() == 11);
  fs::remove_all(out);
}

TEST_CASE("evolve and mc artifacts round-trip and ignore the worker count") {
  RunConfig c = parse_config(R"toml(
[domain]
cells = 8
extent = "2*pi"
[field]
kind = "rotating_shear"
[evolve]
dt = 0.1
T = 0.4
stride = 2
blob_sigma = 0.8
[mc]
N = 4000
dt = 0.05
T = 0.2
bins = 4
seed = 77
)toml");
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  for (const auto& cmd : {"evolve", "mc"}) {
    par::set_workers(1);
    REQUIRE(run(cmd, c, a) == kExitOk);
    par::set_workers(3);
    REQUIRE(run(cmd, c, b) == kExitOk);
    par::set_workers(0);
  }
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == "metadata.toml") continue;
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)), e.path().string());
  }
  const auto snap = read_olap((a / "snapshots" / "snapshot_000004.olap").string());
  const auto fin = read_olap((a / "final.olap").string());
  CHECK(snap.payload == fin.payload);
  const auto diag = csv_rows(slurp(a / "diagnostics.csv"));
  REQUIRE(diag.size() == 6);
  CHECK(std::stod(diag[5][2]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(read_oens((a / "ensemble_ito_euler.oens").string()).size() == 4000);
  const auto h = read_olap((a / "histogram_stratonovich_heun.olap").string());
  CHECK(h.dims == std::array<std::uint64_t, 3>{4, 4, 4});
  const auto cmp = csv_rows(slurp(a / "compare.csv"));
  REQUIRE(cmp.size() == 4);
  CHECK(cmp[3][0] == "ito_euler_vs_stratonovich_heun");
  CHECK(slurp(a / "mc.txt").find("closest_scheme = ") != std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("convergence command") {
  RunConfig c = parse_config(std::string(kBox) + R"toml(
[problem]
exact = "sin(pi*x)*sin(pi*y)*sin(pi*z)"
[convergence]
grids = [8, 16]
)toml");
  const auto out = scratch("convergence");
  REQUIRE(run("convergence", c, out) == kExitOk);
  const auto rows = csv_rows(slurp(out / "convergence.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(std::stod(rows[2][6]) > 1.5);
  fs::remove_all(out);
}
