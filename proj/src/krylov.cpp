#include "olap/krylov.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "olap/parallel.hpp"
#include "olap/text.hpp"

namespace olap {

namespace {

void project(std::span<double> v, const Basis* z) {
  if (!z) return;
  for (const auto& q : *z) par::axpy(-par::dot(q, v), q, v);
}

}  // namespace

SolveResult cg_solve(const CsrMatrix& A, std::span<const double> b, const CgOptions& opt) {
  const std::size_t n = A.rows();
  SolveResult res;
  auto& st = res.stats;
  st.rhs_norm = par::norm2(b);

  std::vector<double> rhs(b.begin(), b.end());
  project(rhs, opt.deflation);
  if (opt.deflation) {
    std::vector<double> diff(n);
    par::for_each(n, [&](std::size_t i) { diff[i] = b[i] - rhs[i]; });
    st.projected_out = par::norm2(diff);
    st.incompatible_rhs = st.projected_out > opt.incompatibility_tol * st.rhs_norm;
  }

  std::vector<double> inv_diag(n, 1.0);
  if (opt.jacobi) {
    const auto d = A.diagonal();
    for (std::size_t i = 0; i < n; ++i) inv_diag[i] = d[i] + opt.shift > 0.0 ? 1.0 / (d[i] + opt.shift) : 1.0;
  }

  auto apply = [&](std::span<const double> x, std::span<double> y) {
    A.multiply(x, y);
    if (opt.shift != 0.0) par::axpy(opt.shift, x, y);
    project(y, opt.deflation);
  };

  res.x.assign(n, 0.0);
  if (opt.x0) std::copy(opt.x0->begin(), opt.x0->end(), res.x.begin());
  project(res.x, opt.deflation);

  std::vector<double> r(n), z(n), p(n), q(n);
  apply(res.x, q);
  par::for_each(n, [&](std::size_t i) { r[i] = rhs[i] - q[i]; });

  const double target = opt.tol * st.rhs_norm;
  double rn = par::norm2(r);
  st.history.push_back(rn);
  if (opt.on_iterate) opt.on_iterate(0, res.x);
  auto precondition = [&] {
    par::for_each(n, [&](std::size_t i) { z[i] = inv_diag[i] * r[i]; });
    project(z, opt.deflation);
  };
  if (rn <= target) {
    st.converged = true;
    st.residual_norm = rn;
    return res;
  }
  precondition();
  p = z;
  double rz = par::dot(r, z);
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    apply(p, q);
    const double pq = par::dot(p, q);
    if (!(pq > 0.0)) break;  // breakdown: A not positive on the search space
    const double alpha = rz / pq;
    par::axpy(alpha, p, res.x);
    par::axpy(-alpha, q, r);
    rn = par::norm2(r);
    st.iterations = it;
    st.history.push_back(rn);
    if (opt.on_iterate) opt.on_iterate(it, res.x);
    if (rn <= target) {
      st.converged = true;
      break;
    }
    precondition();
    const double rz_new = par::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    par::for_each(n, [&](std::size_t i) { p[i] = z[i] + beta * p[i]; });
  }
  project(res.x, opt.deflation);
  apply(res.x, q);
  par::for_each(n, [&](std::size_t i) { r[i] = rhs[i] - q[i]; });
  st.residual_norm = par::norm2(r);
  return res;
}

SolveResult cgnr_solve(const CsrMatrix& A, std::span<const double> b, const CgOptions& opt) {
  const std::size_t n = A.rows();
  const CsrMatrix At = A.transposed();
  SolveResult res;
  auto& st = res.stats;
  st.rhs_norm = par::norm2(b);
  res.x.assign(n, 0.0);
  if (opt.x0) std::copy(opt.x0->begin(), opt.x0->end(), res.x.begin());

  std::vector<double> r(n), s(n), p(n), q(n);
  A.multiply(res.x, q);
  par::for_each(n, [&](std::size_t i) { r[i] = b[i] - q[i]; });
  const double target = opt.tol * st.rhs_norm;
  double rn = par::norm2(r);
  st.history.push_back(rn);
  if (opt.on_iterate) opt.on_iterate(0, res.x);
  if (rn <= target) {
    st.converged = true;
    st.residual_norm = rn;
    return res;
  }
  At.multiply(r, s);
  project(s, opt.deflation);
  p = s;
  double gamma = par::dot(s, s);
  for (std::size_t it = 1; it <= opt.max_iter && gamma > 0.0; ++it) {
    A.multiply(p, q);
    const double qq = par::dot(q, q);
    if (!(qq > 0.0)) break;
    const double alpha = gamma / qq;
    par::axpy(alpha, p, res.x);
    par::axpy(-alpha, q, r);
    rn = par::norm2(r);
    st.iterations = it;
    st.history.push_back(rn);
    if (opt.on_iterate) opt.on_iterate(it, res.x);
    if (rn <= target) {
      st.converged = true;
      break;
    }
    At.multiply(r, s);
    project(s, opt.deflation);
    const double gamma_new = par::dot(s, s);
    const double beta = gamma_new / gamma;
    gamma = gamma_new;
    par::for_each(n, [&](std::size_t i) { p[i] = s[i] + beta * p[i]; });
  }
  A.multiply(res.x, q);
  par::for_each(n, [&](std::size_t i) { r[i] = b[i] - q[i]; });
  st.residual_norm = par::norm2(r);
  return res;
}

void write_history_csv(std::ostream& os, const SolveStats& stats) {
  os << "iteration,residual\n";
  for (std::size_t i = 0; i < stats.history.size(); ++i) os << i << ',' << format_double(stats.history[i]) << '\n';
}

void orthonormalize(Basis& v, const Basis* against) {
  Basis out;
  out.reserve(v.size());
  for (auto& x : v) {
    const double before = par::norm2(x);
    if (before == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      project(x, against);
      for (const auto& q : out) par::axpy(-par::dot(q, x), q, x);
    }
    const double after = par::norm2(x);
    if (after <= 1e-10 * before) continue;
    for (auto& e : x) e /= after;
    out.push_back(std::move(x));
  }
  v = std::move(out);
}

bool SpectrumReport::all_converged() const {
  return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

double gershgorin_bound(const CsrMatrix& A) {
  double m = 0.0;
  const auto& ptr = A.row_ptr();
  const auto& val = A.values();
  const auto& col = A.col();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double center = 0.0, radius = 0.0;
    for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) {
      if (col[p] == i) center += val[p];
      else radius += std::abs(val[p]);
    }
    m = std::max(m, center + radius);
  }
  return m;
}

namespace {

void fill_random(std::vector<double>& v, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  for (auto& x : v) x = nd(rng);
}

}  // namespace

SpectrumReport smallest_eigs(const CsrMatrix& A, std::size_t k, const EigOptions& opt) {
  const std::size_t n = A.rows();
  SpectrumReport rep;
  if (k == 0) return rep;
  const double available = static_cast<double>(n) - (opt.deflation ? static_cast<double>(opt.deflation->size()) : 0.0);
  k = std::min(k, static_cast<std::size_t>(std::max(0.0, available)));
  
  std::mt19937_64 rng(opt.seed);

  Basis locked;          // converged eigenvectors, ascending
  std::vector<double> locked_val, locked_res;
  Basis excluded;        // deflation basis plus locked vectors
  if (opt.deflation) excluded = *opt.deflation;

  Basis v;
  std::vector<double> theta;
  auto refill = [&](std::size_t want) {
    while (v.size() < want) {
      std::vector<double> x(n);
      fill_random(x, rng);
      Basis one{std::move(x)};
      Basis all = excluded;
      all.insert(all.end(), v.begin(), v.end());
      orthonormalize(one, &all);
      if (!one.empty()) {
        v.push_back(std::move(one.front()));
        theta.push_back(0.0);
      }
    }
  };
  const std::size_t extra = std::max<std::size_t>(4, k / 4);
  const double a_norm = A.inf_norm();
  const double tol = opt.tol > 0.0 ? opt.tol : 1e-8 * a_norm;
  refill(std::min<std::size_t>(k + extra, n - excluded.size()));

  std::vector<double> av(n);
  std::vector<double> last_res;
  std::vector<double> last_theta;
  Basis prev;
  for (std::size_t sweep = 1; sweep <= opt.max_sweeps && locked.size() < k; ++sweep) {
    rep.sweeps = sweep;
    Basis y(v.size(), std::vector<double>(n));
    CgOptions cg;
    // inexact inner solves, tightened as the Ritz residuals shrink
    const double smallest_res = last_res.empty() ? INFINITY : *std::min_element(last_res.begin(), last_res.end());
    cg.tol = std::clamp(1e-2 * smallest_res / a_norm, 1e-12, 1e-4);
    cg.max_iter = 20 * n + 100;
    cg.shift = opt.shift;
    cg.deflation = excluded.empty() ? nullptr : &excluded;
    for (std::size_t j = 0; j < v.size(); ++j) {
      std::vector<double> guess;
      if (theta[j] > 0.0) {
        guess = v[j];
        for (auto& e : guess) e /= theta[j] + opt.shift;
        cg.x0 = std::span<const double>(guess);
      } else {
        cg.x0.reset();
      }
      auto sol = cg_solve(A, v[j], cg);
      rep.inner_iterations += sol.stats.iterations;
      y[j] = std::move(sol.x);
    }
    orthonormalize(y, excluded.empty() ? nullptr : &excluded);
    const std::size_t keep = y.size();
    if (keep == 0) break;
    // Rayleigh-Ritz over the new block, the current Ritz vectors and the
    // previous ones (locally optimal three-term recurrence)
    Basis aug = v;
    aug.insert(aug.end(), prev.begin(), prev.end());
    Basis against = excluded;
    against.insert(against.end(), y.begin(), y.end());
    orthonormalize(aug, &against);
    prev = v;
    y.insert(y.end(), std::make_move_iterator(aug.begin()), std::make_move_iterator(aug.end()));
    const std::size_t m = y.size();

    Basis ay(m, std::vector<double>(n));
    for (std::size_t j = 0; j < m; ++j) A.multiply(y[j], ay[j]);
    Eigen::MatrixXd H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) {
        const double h = 0.5 * (par::dot(y[i], ay[j]) + par::dot(y[j], ay[i]));
        H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = h;
        H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = h;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::MatrixXd& Q = es.eigenvectors();
    Basis nv(keep, std::vector<double>(n, 0.0));
    theta.assign(keep, 0.0);
    for (std::size_t c = 0; c < keep; ++c) {
      theta[c] = es.eigenvalues()(static_cast<Eigen::Index>(c));
      for (std::size_t j = 0; j < m; ++j) {
        const double q = Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
        par::axpy(q, y[j], nv[c]);
      }
    }
    std::vector<double> res(keep);
    for (std::size_t c = 0; c < keep; ++c) {
      A.multiply(nv[c], av);
      par::axpy(-theta[c], nv[c], av);
      res[c] = par::norm2(av);
    }
    // lock the leading run of converged pairs
    std::size_t nlock = 0;
    while (nlock < keep && locked.size() + nlock < k && res[nlock] <= tol) ++nlock;
    for (std::size_t c = 0; c < nlock; ++c) {
      locked.push_back(nv[c]);
      excluded.push_back(nv[c]);
      locked_val.push_back(theta[c]);
      locked_res.push_back(res[c]);
    }
    v.assign(std::make_move_iterator(nv.begin() + static_cast<std::ptrdiff_t>(nlock)),
             std::make_move_iterator(nv.end()));
    theta.erase(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(nlock));
    last_res.assign(res.begin() + static_cast<std::ptrdiff_t>(nlock), res.end());
    if (nlock > 0) {
      // the remaining Ritz vectors stay orthogonal to the locked ones
      orthonormalize(v, &excluded);
      theta.resize(v.size());
      const std::size_t want = std::min(k - locked.size() + extra, n - excluded.size());
      if (v.size() > want) {
        v.resize(want);
        theta.resize(want);
      }
      refill(want);
    }
  }
  rep.eigenvalues = locked_val;
  rep.residuals = locked_res;
  rep.converged.assign(locked.size(), true);
  rep.vectors = locked;
  for (std::size_t c = 0; locked.size() + c < k && c < v.size(); ++c) {
    rep.eigenvalues.push_back(theta[c]);
    rep.residuals.push_back(c < last_res.size() ? last_res[c] : INFINITY);
    rep.converged.push_back(false);
    rep.vectors.push_back(v[c]);
  }
  return rep;
}

NullspaceReport nullspace_dim(const CsrMatrix& A, std::optional<double> lambda_null, std::size_t k_start,
                              std::size_t k_max, const EigOptions& options) {
  NullspaceReport rep;
  rep.threshold = lambda_null.value_or(1e-9 * gershgorin_bound(A));
  k_max = std::min(k_max, A.rows());
  for (std::size_t k = std::max<std::size_t>(k_start, 1);; k = std::min(2 * k, k_max)) {
    rep.k_used = k;
    rep.spectrum = smallest_eigs(A, k, options);
    const auto& ev = rep.spectrum.eigenvalues;
    if (!rep.spectrum.all_converged()) {
      rep.note = "eigenvalue iteration did not converge";
      return rep;
    }
    std::size_t m = 0;
    while (m < ev.size() && ev[m] <= rep.threshold) ++m;
    if (m < ev.size()) {
      rep.gap_ratio = rep.threshold > 0.0 ? ev[m] / rep.threshold : INFINITY;
      if (rep.gap_ratio >= kNullGap) {
        rep.dimension = m;
        return rep;
      }
      rep.note = "no eigenvalue gap of factor 100 above the null threshold";
      return rep;
    }
    if (k == k_max) {
      if (ev.size() == A.rows()) {
        rep.dimension = m;
        return rep;
      }
      rep.note = "all computed eigenvalues lie below the null threshold";
      return rep;
    }
  }
}

}  // namespace olap
