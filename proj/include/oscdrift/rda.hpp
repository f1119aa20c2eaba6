#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oscdrift/coefficient.hpp"
#include "oscdrift/mesh.hpp"
#include "oscdrift/potential.hpp"

namespace oscdrift {

/// Growth rate sigma(x) of u_t = u_xx + 2 s m_x u_x + u (sigma - u) on [0, 1].
struct SigmaProfile {
  std::function<double(double)> fn;
  double a = 0.25;
  double b = 0.75;
  std::vector<double> breakpoints;  // interior kinks
  std::string description;

  double operator()(double x) const { return fn(x); }
  /// max of sigma over [a, b] and over [0, 1], sampled on a fine grid plus kinks.
  double max_inner() const;
  double max_all() const;
};

/// -96 on [0, 1/4), 3072 x - 864 up to 9/32, -512 (x - 1/2)^2 + 49/2 up to 1/2,
/// mirrored about 1/2.
double sigma_example(double x);
SigmaProfile sigma_example_profile();
SigmaProfile constant_sigma(double value, double a = 0.25, double b = 0.75);
SigmaProfile shifted(const SigmaProfile& sigma, double shift);

/// c = -sigma, for the linearized eigenproblem.
Coefficient reaction_coefficient(const SigmaProfile& sigma);

/// Three clauses: positive mass on (a, b); pi^2 / (b - a)^2 > max_{[a,b]} sigma;
/// sign pattern near a, b with sigma(x) <= sigma(a) = sigma(b) < -(32/3)(b - a - 4 eps)^{-2}
/// outside (a, b).
Report validate_sigma(const SigmaProfile& sigma, double eps);

struct SigmaEigenReport {
  double lambda_N = 0.0;
  double lambda_D = 0.0;
  double h_estimate_N = 0.0;
  double h_estimate_D = 0.0;
  double outside_min = 0.0;      // min of -sigma on [0, a] and [b, 1]
  double certificate = 0.0;      // Rayleigh quotient of the plateau test function
  double certificate_bound = 0.0;  // (32/3)(b - a - 4 eps)^{-2}
  double slack = 0.0;
  Report report;
};

/// lambda~^N < 0 < lambda~^D < min(-sigma outside) for c = -sigma on (a, b), and
/// the plateau test function bound for lambda~^D.
SigmaEigenReport sigma_eigen_check(const SigmaProfile& sigma, double eps, std::size_t intervals = 4000);

struct RdaOptions {
  double t_max = 10.0;
  double dt = 0.0;          // 0 picks min((b - a)^2 / 50, 0.01 / max |sigma|)
  int max_halvings = 10;
  std::size_t samples = 400;  // recorded time points (roughly)
};

struct RdaSample {
  double t = 0.0;
  double sup_norm = 0.0;
  double mass = 0.0;
  double rate_estimate = 0.0;  // d log sup / dt since the previous sample
};

struct RdaSummary {
  std::vector<RdaSample> series;
  std::vector<double> final_state;
  double t_final = 0.0;
  double dt = 0.0;             // step actually used
  int halvings = 0;
  double rate = 0.0;           // slope of log sup over the last 20% of the run
  double relative_change = 0.0;  // sup |u(T) - u(0.8 T)| / sup u(T)
  double min_value = 0.0;      // smallest nodal value seen
  double max_value = 0.0;      // largest nodal value seen
};

/// 0.1 (1 + cos 2 pi x) / 2 + 0.05 at the mesh nodes.
std::vector<double> default_initial_state(const Mesh& mesh);

/// Implicit Scharfetter-Gummel finite volumes for diffusion and advection with
/// Neumann data; the reaction substep applies the exact pointwise logistic flow.
/// The step is halved (up to max_halvings times) while a substep produces a
/// negative or non-finite value, then StepUnstable is thrown.
RdaSummary rda_run(const PiecewisePotential& m, double s, const SigmaProfile& sigma,
                   std::span<const double> u0, const Mesh& mesh, const RdaOptions& options = {});

enum class Verdict { Persistence, Extinction, Undecided };
const char* to_string(Verdict v) noexcept;

Verdict classify(const RdaSummary& summary);

/// Verdict the linearization predicts from the sign of lambda_1.
Verdict predicted_verdict(double lambda1);

void write_trajectory_csv(std::ostream& out, const RdaSummary& summary);

struct PhasePoint {
  double s = 0.0;
  double lambda1 = 0.0;
  Verdict verdict = Verdict::Undecided;
};
void write_phase_csv(std::ostream& out, const std::vector<PhasePoint>& points);

/// a = 1/4, h = 1/10, alpha = 1/8, beta = 1/4, nu = 2, l = 1 (delta = 25/168).
StepParams rda_params();

}  // namespace oscdrift
