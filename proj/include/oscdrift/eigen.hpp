#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oscdrift/assembly.hpp"

namespace oscdrift {

struct SolverOptions {
  double tol = 1e-13;        // relative width of the final bisection bracket
  int max_bisection = 400;
  int max_inverse = 60;
  int max_expansions = 60;   // bracket doublings before NoConvergence
  bool estimate_error = true;  // one refinement for the Richardson estimate
  std::size_t cap = 2'000'000;
};

struct EigenResult {
  double lambda = 0.0;
  /// Nodal values of the minimizer: w = e^{s m} phi (up to a constant factor)
  /// on the d = 1 full problem, phi otherwise. Positive, M-normalized.
  std::vector<double> eigvec;
  double residual = 0.0;
  double h_estimate = 0.0;            // (4/3) |lambda_h - lambda_{h/2}|
  double lambda_refined = 0.0;        // lambda_{h/2}; equals lambda without estimate
  double lambda_extrapolated = 0.0;   // lambda_{h/2} + (lambda_{h/2} - lambda_h) / 3
  std::size_t nodes = 0;
  int bisection_steps = 0;
};

/// Number of generalized eigenvalues of the pencil strictly below x.
std::size_t sturm_count(const Pencil& pencil, double x);

/// Smallest eigenpair of a pencil by Sturm bisection and inverse iteration.
/// [lo, hi] is the initial bracket; it is expanded as needed.
EigenResult solve_pencil(const Pencil& pencil, double lo, double hi, const SolverOptions& options = {});

EigenResult principal_eigenvalue(const EigenProblem& problem, const Mesh& mesh,
                                 const SolverOptions& options = {});

struct ReferencePair {
  double lambda_D = 0.0;
  double lambda_N = 0.0;
  std::vector<double> phi_D;  // on the [a, b] nodes, zero at both ends
  std::vector<double> phi_N;  // on the [a, b] nodes
  double h_estimate_D = 0.0;
  double h_estimate_N = 0.0;
  double extrapolated_D = 0.0;
  double extrapolated_N = 0.0;
};

/// Principal Dirichlet and Neumann eigenpairs of -(r^{d-1} phi')' / r^{d-1} + c phi
/// on (a, b), normalized by the weighted mass. Throws if lambda_D <= lambda_N.
ReferencePair reference_pair(double a, double b, const Coefficient& c, int d, const Mesh& mesh,
                             const SolverOptions& options = {});

double rayleigh_quotient(std::span<const double> values, const Pencil& pencil);
/// `values` are in the representation of EigenResult::eigvec for this problem.
double rayleigh_quotient(std::span<const double> values, const EigenProblem& problem, const Mesh& mesh);

/// phi given on the full mesh -> scaled unknowns w_i = phi_i e^{s m_i - C}, with
/// C chosen so the largest entry has order one.
std::vector<double> to_scaled(std::span<const double> phi, const EigenProblem& problem, const Mesh& mesh);
/// Same, from log phi (entries may be -infinity for phi = 0).
std::vector<double> to_scaled_log(std::span<const double> log_phi, const EigenProblem& problem,
                                  const Mesh& mesh);

/// phi_D extended by zero outside [a, b], on the full mesh.
std::vector<double> dirichlet_test_function(std::span<const double> phi_D, double a, double b,
                                            const Mesh& mesh);

struct CertificateBundle {
  int n_first = 1;                 // index of sigma[0], p[0]
  std::vector<double> log_sigma;   // log sigma_n
  std::vector<double> sigma;       // may be +inf where log_sigma > 709
  std::vector<double> log_p;       // log p_n
  std::vector<double> p;           // may underflow to 0
  int tail_end = 0;                // last k kept in the infinite product
  std::vector<double> test_function;  // scaled staircase values, when built
  double rayleigh = 0.0;
};

/// sigma_n(s) = (alpha beta)^{(n+l)/2} e^{s (1 + nu) kappa h^n} and
/// p_n(s) = 1 / prod_{k >= n} (1 + sigma_k(s)) for n = 1..n_max, accumulated in
/// log space. The product stops once sigma_k < 1e-18 and is decreasing.
CertificateBundle staircase(const StepParams& params, double s, int n_max);

/// Staircase test function for an S_N potential: zero up to delta - delta_1,
/// ramp, plateaus phi_N(a) p_n on [Y_{n-1}, X_n), linear pieces on [X_n, Y_n),
/// phi_N on [a, b], mirrored with ratio phi_N(b)/phi_N(a). Returned in scaled
/// unknowns for the full d = 1 problem at strength s.
std::vector<double> neumann_test_function(const StepParams& params, double s,
                                          std::span<const double> phi_N,
                                          const EigenProblem& problem, const Mesh& mesh);

}  // namespace oscdrift
