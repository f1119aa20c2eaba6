#include <algorithm>
#include <cmath>
#include <limits>

#include "oscdrift/eigen.hpp"
#include "oscdrift/errors.hpp"

namespace oscdrift {

namespace {

double log_sigma(const StepParams& p, double s, int n) {
  return 0.5 * (n + p.l) * std::log(p.alpha * p.beta) + s * (1.0 + p.nu) * p.kappa * std::pow(p.h, n);
}

// log(1 + e^x) without overflow.
double log1p_exp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

CertificateBundle staircase(const StepParams& params, double s, int n_max) {
  if (!(s >= 0.0)) throw Error(ErrorKind::InvalidParams, "s must be nonnegative");
  if (n_max < 1) throw Error(ErrorKind::InvalidParams, "n_max must be >= 1");
  CertificateBundle out;
  out.n_first = 1;

  // Extend the product until sigma_k is negligible and already decreasing,
  // i.e. the exponential factor has died out.
  int k_end = n_max;
  const double log_floor = std::log(1e-18);
  while (k_end < 100000) {
    const double ls = log_sigma(params, s, k_end + 1);
    const double growth = s * (1.0 + params.nu) * params.kappa * std::pow(params.h, k_end + 1);
    if (ls < log_floor && growth < 1.0) break;
    ++k_end;
  }
  out.tail_end = k_end;

  std::vector<double> log1p_sigma(static_cast<std::size_t>(k_end + 1), 0.0);
  for (int k = 1; k <= k_end; ++k) log1p_sigma[static_cast<std::size_t>(k)] = log1p_exp(log_sigma(params, s, k));

  std::vector<double> suffix(static_cast<std::size_t>(k_end + 2), 0.0);
  for (int k = k_end; k >= 1; --k) {
    suffix[static_cast<std::size_t>(k)] = suffix[static_cast<std::size_t>(k + 1)] + log1p_sigma[static_cast<std::size_t>(k)];
  }
  for (int n = 1; n <= n_max; ++n) {
    const double ls = log_sigma(params, s, n);
    out.log_sigma.push_back(ls);
    out.sigma.push_back(std::exp(ls));
    const double lp = -suffix[static_cast<std::size_t>(n)];
    out.log_p.push_back(lp);
    out.p.push_back(std::exp(lp));
  }
  return out;
}

std::vector<double> neumann_test_function(const StepParams& params, double s,
                                          std::span<const double> phi_N,
                                          const EigenProblem& problem, const Mesh& mesh) {
  params.validate();
  const double a = params.a, b = params.b;
  const std::size_t ia = mesh.index_of(a);
  const std::size_t ib = mesh.index_of(b);
  if (phi_N.size() != ib - ia + 1) {
    throw Error(ErrorKind::InvalidParams, "phi_N does not match the [a, b] nodes of the mesh");
  }
  if (!(phi_N.front() > 0.0 && phi_N.back() > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "phi_N must be positive at a and b");
  }

  // Enough levels that every node left of a falls in some plateau or ramp.
  int levels = 1;
  while (levels < 2000 && std::pow(params.alpha, levels + params.l) + std::pow(params.beta, levels + params.l) > 1e-17) ++levels;
  const CertificateBundle cb = staircase(params, s, levels + 1);
  const Breakpoints bp = breakpoints(params, levels);
  const double log_phi_a = std::log(phi_N.front());
  const double log_ratio = std::log(phi_N.back()) - log_phi_a;

  // Ramp support left of delta: as wide as possible while m <= (3/2) kappa h, at most delta/2.
  const double bound = 1.5 * params.kappa * params.h;
  double delta1 = 0.0;
  {
    const std::size_t id = std::lower_bound(mesh.nodes.begin(), mesh.nodes.end(), params.delta) - mesh.nodes.begin();
    for (std::size_t i = id; i-- > 0;) {
      const double r = mesh.nodes[i];
      if (params.delta - r > 0.5 * params.delta) break;
      if (problem.m.value(r) - problem.m.offset() > bound) break;
      delta1 = params.delta - r;
    }
    if (delta1 <= 0.0) throw Error(ErrorKind::InvalidParams, "no room for the staircase ramp left of delta");
  }

  const auto log_left = [&](double r) -> double {
    // Left-half formula, relative to phi_N(a).
    if (r < params.delta - delta1) return -std::numeric_limits<double>::infinity();
    if (r < params.delta) {
      const double frac = (r - params.delta + delta1) / delta1;
      return frac > 0.0 ? std::log(frac) + cb.log_p[0] : -std::numeric_limits<double>::infinity();
    }
    const double tail = a - r;
    for (int n = 1; n <= levels; ++n) {
      const auto i = static_cast<std::size_t>(n - 1);
      if (tail > bp.y_tail[i]) return cb.log_p[i];  // plateau [Y_{n-1}, X_n)
      if (tail > bp.x_tail[i + 1]) {                // ramp [X_n, Y_n)
        const double width = std::pow(params.beta, n + params.l);
        const double frac = std::max(0.0, (bp.y_tail[i] - tail) / width);
        if (frac == 0.0) return cb.log_p[i];
        return cb.log_p[i] + log1p_exp(cb.log_sigma[i] + std::log(frac));
      }
    }
    return 0.0;
  };

  std::vector<double> log_phi(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const double r = mesh.nodes[i];
    if (i >= ia && i <= ib) {
      log_phi[i] = std::log(phi_N[i - ia]);
    } else if (i < ia) {
      log_phi[i] = log_phi_a + log_left(r);
    } else {
      log_phi[i] = log_phi_a + log_ratio + log_left(1.0 - r);
    }
  }
  EigenProblem scaled = problem;
  scaled.s = s;
  return to_scaled_log(log_phi, scaled, mesh);
}

}  // namespace oscdrift
