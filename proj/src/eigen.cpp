#include "oscdrift/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "oscdrift/errors.hpp"

namespace oscdrift {

namespace {

// LDL^T of A - x M: pivots d and off-diagonal entries e.
struct Ldl {
  std::vector<double> d, e;
};

double guard(double d) { return d == 0.0 ? -std::numeric_limits<double>::min() : d; }

// When element forms are available the pivots are accumulated element by
// element: with S the Schur complement carried into the left node of an element
// with local matrix [ll lr; lr rr], the next one is (rr S + det) / (S + ll). The
// determinant is formed with the k^2 stiffness term cancelled analytically, so
// stiff tiny elements do not wipe out the O(h) part of the pivots.
Ldl factor(const Pencil& p, double x) {
  const std::size_t n = p.size();
  Ldl f;
  f.d.assign(n, 0.0);
  f.e.assign(n > 0 ? n - 1 : 0, 0.0);
  if (p.elements.empty()) {
    double q = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = p.a_diag[i] - x * p.m_diag[i];
      if (i > 0) {
        f.e[i - 1] = p.a_off[i - 1] - x * p.m_off[i - 1];
        if (f.e[i - 1] != 0.0) d -= f.e[i - 1] * (f.e[i - 1] / q);
      }
      q = f.d[i] = guard(d);
    }
    return f;
  }
  double carry = 0.0;
  bool started = false;
  for (const ElementForm& el : p.elements) {
    const double g = el.cref - x;
    // Local entries at the element's i and j ends.
    const double k = el.coef;
    const double pii = el.cii + g * el.mii, pjj = el.cjj + g * el.mjj, pij = el.cij + g * el.mij;
    const double ii = k * el.fi * el.fi + pii, jj = k * el.fj * el.fj + pjj;
    const double ij = -k * el.fi * el.fj + pij;
    if (el.i < 0 || el.j < 0) {
      const std::ptrdiff_t node = el.i < 0 ? el.j : el.i;
      const double own = el.i < 0 ? jj : ii;
      if (node < 0) continue;
      if (!started) {
        carry = own;  // eliminated node on the left
        started = true;
      } else {
        f.d[static_cast<std::size_t>(node)] = guard(carry + own);
        carry = 0.0;
      }
      continue;
    }
    const bool i_left = el.i < el.j;
    const auto left = static_cast<std::size_t>(std::min(el.i, el.j));
    const double ll = i_left ? ii : jj, rr = i_left ? jj : ii;
    const double det = k * (el.fi * el.fi * pjj + 2.0 * el.fi * el.fj * pij + el.fj * el.fj * pii) +
                       (pii * pjj - pij * pij);
    const double d = guard(carry + ll);
    f.d[left] = d;
    f.e[left] = ij;
    carry = (rr * carry + det) / d;
    started = true;
    if (left + 2 == n) f.d[n - 1] = guard(carry);
  }
  return f;
}

// Solves (A - x M) y = rhs in place from the factorization.
bool ldl_solve(const Ldl& f, std::vector<double>& rhs) {
  const std::size_t n = f.d.size();
  for (std::size_t i = 1; i < n; ++i) rhs[i] -= (f.e[i - 1] / f.d[i - 1]) * rhs[i - 1];
  rhs[n - 1] /= f.d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - f.e[i] * rhs[i + 1]) / f.d[i];
  return std::all_of(rhs.begin(), rhs.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> apply(const std::vector<double>& diag, const std::vector<double>& off,
                          std::span<const double> x) {
  const std::size_t n = diag.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += off[i - 1] * x[i - 1];
    if (i + 1 < n) v += off[i] * x[i + 1];
    y[i] = v;
  }
  return y;
}

double dot(std::span<const double> x, std::span<const double> y) {
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

struct InverseResult {
  std::vector<double> vec;
  bool converged = false;
};

InverseResult inverse_iteration(const Pencil& p, double shift, int max_iter) {
  const std::size_t n = p.size();
  const Ldl f = factor(p, shift);

  InverseResult out;
  std::vector<double> x(n, 1.0);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> y = apply(p.m_diag, p.m_off, x);
    if (!ldl_solve(f, y)) {
      out.vec.clear();
      return out;
    }
    const double scale = std::sqrt(dot(y, apply(p.m_diag, p.m_off, y)));
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      out.vec.clear();
      return out;
    }
    for (double& v : y) v /= scale;
    if (std::accumulate(y.begin(), y.end(), 0.0) < 0.0) {
      for (double& v : y) v = -v;
    }
    // Change measured in the M-norm: entries on tiny elements carry rounding
    // noise of order eps * |A| but negligible mass.
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = y[i] - x[i];
    const double change = std::sqrt(std::max(0.0, dot(diff, apply(p.m_diag, p.m_off, diff))));
    x = std::move(y);
    if (it > 0 && change <= 1e-10) {
      out.converged = true;
      break;
    }
  }
  out.vec = std::move(x);
  return out;
}

}  // namespace

std::size_t sturm_count(const Pencil& pencil, double x) {
  const Ldl f = factor(pencil, x);
  return static_cast<std::size_t>(std::count_if(f.d.begin(), f.d.end(), [](double d) { return d < 0.0; }));
}

EigenResult solve_pencil(const Pencil& pencil, double lo, double hi, const SolverOptions& options) {
  if (pencil.size() == 0) throw Error(ErrorKind::InvalidParams, "empty pencil");
  if (!(hi > lo)) hi = lo + 1.0;
  int expansions = 0;
  while (sturm_count(pencil, hi) == 0) {
    if (++expansions > options.max_expansions) {
      throw Error(ErrorKind::NoConvergence, "could not bracket the principal eigenvalue from above");
    }
    hi += (hi - lo);
  }
  while (sturm_count(pencil, lo) > 0) {
    if (++expansions > options.max_expansions) {
      throw Error(ErrorKind::NoConvergence, "could not bracket the principal eigenvalue from below");
    }
    lo -= (hi - lo);
  }

  EigenResult res;
  while (hi - lo > options.tol * std::max({std::abs(lo), std::abs(hi), 1.0})) {
    if (++res.bisection_steps > options.max_bisection) {
      throw Error(ErrorKind::NoConvergence, "bisection did not reach the requested tolerance");
    }
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(pencil, mid) >= 1) hi = mid;
    else lo = mid;
  }
  res.lambda = 0.5 * (lo + hi);

  const double bracket = res.lambda;
  const auto clustered = [&](const InverseResult& r) {
    // Unconverged iterates are still acceptable when they lie in the cluster at
    // the bottom of the spectrum (nearly degenerate wells at large s).
    if (r.vec.empty()) return false;
    const double rq = pencil.energy(r.vec) / pencil.mass(r.vec);
    return std::abs(rq - bracket) <= 1e-8 * std::max(1.0, std::abs(bracket));
  };
  InverseResult inv = inverse_iteration(pencil, lo, options.max_inverse);
  if (!inv.converged && !clustered(inv)) {
    // Documented escape hatch: nudge the shift once.
    const double nudge = 1e-3 * options.tol * std::max(1.0, std::abs(lo));
    inv = inverse_iteration(pencil, lo - nudge, options.max_inverse);
    if (!inv.converged && !clustered(inv)) {
      throw Error(ErrorKind::NoConvergence, "inverse iteration stalled");
    }
  }
  res.eigvec = std::move(inv.vec);
  // The element-wise Rayleigh quotient is accurate to rounding in the forms,
  // unlike the bisection bracket which is limited by the conditioning of A - x M.
  const double rq = pencil.energy(res.eigvec) / pencil.mass(res.eigvec);
  if (std::isfinite(rq)) res.lambda = rq;

  // Componentwise relative residual |r_i| / (|A||v| + |lambda||M||v|)_i, with
  // eps times the largest row scale added so rows of pure rounding noise (entries
  // many decades below the peak) do not dominate.
  const std::vector<double>& v = res.eigvec;
  const std::size_t n = v.size();
  std::vector<double> rows(n), scales(n);
  double top = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = (pencil.a_diag[i] - res.lambda * pencil.m_diag[i]) * v[i];
    double scale = (std::abs(pencil.a_diag[i]) + std::abs(res.lambda * pencil.m_diag[i])) * std::abs(v[i]);
    if (i > 0) {
      r += (pencil.a_off[i - 1] - res.lambda * pencil.m_off[i - 1]) * v[i - 1];
      scale += (std::abs(pencil.a_off[i - 1]) + std::abs(res.lambda * pencil.m_off[i - 1])) * std::abs(v[i - 1]);
    }
    if (i + 1 < n) {
      r += (pencil.a_off[i] - res.lambda * pencil.m_off[i]) * v[i + 1];
      scale += (std::abs(pencil.a_off[i]) + std::abs(res.lambda * pencil.m_off[i])) * std::abs(v[i + 1]);
    }
    rows[i] = std::abs(r);
    scales[i] = scale;
    top = std::max(top, scale);
  }
  res.residual = 0.0;
  const double floor = std::numeric_limits<double>::epsilon() * top;
  for (std::size_t i = 0; i < n; ++i) {
    if (scales[i] + floor > 0.0) res.residual = std::max(res.residual, rows[i] / (scales[i] + floor));
  }
  res.nodes = pencil.size();
  res.lambda_refined = res.lambda;
  res.lambda_extrapolated = res.lambda;
  return res;
}

EigenResult principal_eigenvalue(const EigenProblem& problem, const Mesh& mesh,
                                 const SolverOptions& options) {
  const Pencil pencil = assemble(problem, mesh);
  const double lo = problem.c.min - 1.0;
  const double hi = problem.c.max + 1.0;
  EigenResult res = solve_pencil(pencil, lo, hi, options);
  if (options.estimate_error) {
    const Mesh fine = refine(mesh, options.cap);
    SolverOptions inner = options;
    inner.estimate_error = false;
    const EigenResult fine_res = solve_pencil(assemble(problem, fine), lo, hi, inner);
    res.lambda_refined = fine_res.lambda;
    res.h_estimate = 4.0 / 3.0 * std::abs(res.lambda - fine_res.lambda);
    res.lambda_extrapolated = fine_res.lambda + (fine_res.lambda - res.lambda) / 3.0;
  }
  return res;
}

ReferencePair reference_pair(double a, double b, const Coefficient& c, int d, const Mesh& mesh,
                             const SolverOptions& options) {
  if (!(0.0 < a && a < b && b < 1.0)) throw Error(ErrorKind::InvalidParams, "need 0 < a < b < 1");
  EigenProblem problem;
  problem.d = d;
  problem.c = c;
  problem.a = a;
  problem.b = b;
  problem.m = zero_potential();

  ReferencePair out;
  problem.domain = Domain::SubDirichlet;
  EigenResult dir = principal_eigenvalue(problem, mesh, options);
  problem.domain = Domain::SubNeumann;
  EigenResult neu = principal_eigenvalue(problem, mesh, options);

  out.lambda_D = dir.lambda;
  out.lambda_N = neu.lambda;
  out.h_estimate_D = dir.h_estimate;
  out.h_estimate_N = neu.h_estimate;
  out.extrapolated_D = dir.lambda_extrapolated;
  out.extrapolated_N = neu.lambda_extrapolated;
  out.phi_D.reserve(dir.eigvec.size() + 2);
  out.phi_D.push_back(0.0);
  out.phi_D.insert(out.phi_D.end(), dir.eigvec.begin(), dir.eigvec.end());
  out.phi_D.push_back(0.0);
  out.phi_N = std::move(neu.eigvec);
  if (!(out.lambda_D > out.lambda_N)) {
    std::ostringstream msg;
    msg << "reference ordering violated: lambda_D = " << out.lambda_D
        << ", lambda_N = " << out.lambda_N;
    throw Error(ErrorKind::NoConvergence, msg.str());
  }
  return out;
}

double rayleigh_quotient(std::span<const double> values, const Pencil& pencil) {
  if (values.size() != pencil.size()) {
    throw Error(ErrorKind::InvalidParams, "value count does not match the pencil");
  }
  const double den = pencil.mass(values);
  if (!(den > 0.0)) throw Error(ErrorKind::ZeroFunction, "test function has zero mass");
  return pencil.energy(values) / den;
}

double rayleigh_quotient(std::span<const double> values, const EigenProblem& problem,
                         const Mesh& mesh) {
  return rayleigh_quotient(values, assemble(problem, mesh));
}

std::vector<double> to_scaled_log(std::span<const double> log_phi, const EigenProblem& problem,
                                  const Mesh& mesh) {
  const Mesh& nodes = mesh;
  if (log_phi.size() != nodes.size()) {
    throw Error(ErrorKind::InvalidParams, "value count does not match the mesh");
  }
  const bool weighted = problem.fitted();
  std::vector<double> exponent(log_phi.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < exponent.size(); ++i) {
    const double m = weighted ? problem.m.value(nodes.nodes[i]) - problem.m.offset() : 0.0;
    exponent[i] = log_phi[i] + problem.s * m;
    top = std::max(top, exponent[i]);
  }
  if (!std::isfinite(top)) throw Error(ErrorKind::ZeroFunction, "test function vanishes");
  std::vector<double> w(exponent.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(exponent[i] - top);
  return w;
}

std::vector<double> to_scaled(std::span<const double> phi, const EigenProblem& problem,
                              const Mesh& mesh) {
  std::vector<double> log_phi(phi.size());
  std::vector<double> sign(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    log_phi[i] = phi[i] == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(phi[i]));
    sign[i] = phi[i] < 0.0 ? -1.0 : 1.0;
  }
  std::vector<double> w = to_scaled_log(log_phi, problem, mesh);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= sign[i];
  return w;
}

std::vector<double> dirichlet_test_function(std::span<const double> phi_D, double a, double b,
                                            const Mesh& mesh) {
  const std::size_t i0 = mesh.index_of(a);
  const std::size_t i1 = mesh.index_of(b);
  if (phi_D.size() != i1 - i0 + 1) {
    throw Error(ErrorKind::InvalidParams, "phi_D does not match the [a, b] nodes of the mesh");
  }
  std::vector<double> out(mesh.size(), 0.0);
  std::copy(phi_D.begin(), phi_D.end(), out.begin() + static_cast<std::ptrdiff_t>(i0));
  return out;
}

}  // namespace oscdrift
