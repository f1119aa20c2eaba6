#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oscdrift/coefficient.hpp"
#include "oscdrift/eigen.hpp"
#include "oscdrift/instances.hpp"
#include "oscdrift/mesh.hpp"
#include "oscdrift/potential.hpp"

namespace oscdrift {

struct SearchOptions {
  double ratio = 1.25;  // geometric s-grid
  double s_cap = 1e7;
  unsigned threads = 0;  // grid points solved concurrently; 0 = hardware concurrency
  SolverOptions solver;
};

struct SweepPoint {
  double s = 0.0;
  EigenResult result;
  double seconds = 0.0;
};

struct TargetSearch {
  double s = 0.0;
  EigenResult result;
  double tol = 0.0;             // tolerance actually applied at s
  double analytic_bound = 0.0;  // 8 / ln(1 + 1/((stage + 1) c*)), logged only
  std::vector<SweepPoint> visited;
};

/// Lower strength the existence argument asks for at `stage` (1-based).
double analytic_strength_bound(int stage, double c_star);

/// Walks s_start * ratio^i upward and returns the first grid point with
/// |lambda(s) - target| < max(tol, 3 h_estimate). Throws SweepExhausted past s_cap.
TargetSearch find_s_for_target(const PiecewisePotential& m, const Coefficient& c, double target,
                               double tol, double s_start, const Mesh& mesh,
                               const SearchOptions& options = {}, int stage = 1);

/// Solves lambda(s) at every grid point, concurrently; results keep grid order.
std::vector<SweepPoint> sweep(const PiecewisePotential& m, const Coefficient& c,
                              std::span<const double> s_grid, const Mesh& mesh,
                              const SearchOptions& options = {});

/// Geometric grid from lo to hi (both included) with `count` points.
std::vector<double> geometric_grid(double lo, double hi, std::size_t count);

/// max |m1 - m2| over [0, 1], sampled densely on the common refinement of the pieces.
double sup_distance(const PiecewisePotential& m1, const PiecewisePotential& m2);

struct ContinuityReport {
  bool pass = false;
  double lhs = 0.0;       // |lambda1 - lambda2|
  double rhs = 0.0;       // c* (e^{4 s |m1 - m2|} - 1) + 2 slack
  double distance = 0.0;  // |m1 - m2| sup
  double slack = 0.0;
};

/// Eigenvalue continuity in m at fixed s. `slack` bounds the numerical error of
/// each eigenvalue (residual and discretization).
ContinuityReport continuity_certificate(double s, const PiecewisePotential& m1,
                                        const PiecewisePotential& m2, double c_star,
                                        double lambda1, double lambda2, double slack = 0.0);

/// Slack for continuity_certificate from two solves: residual times |lambda|
/// plus the Richardson estimate, of the worse of the two.
double solve_slack(const EigenResult& r1, const EigenResult& r2);

struct StageRecord {
  int k = 0;
  Regime regime = Regime::SD;  // regime of m_k
  double target = 0.0;
  double tol = 0.0;
  double s = 0.0;
  double lambda = 0.0;  // lambda(s_k, m_k)
  double residual = 0.0;
  double h_estimate = 0.0;
  double analytic_bound = 0.0;
  MembershipReport membership;  // m_k against the stage's shifted envelope
  int envelope_shift = 0;       // levels the envelope parameters were shifted by
  // Fold producing m_{k+1}
  double tau = 0.0;
  double delta_tau = 0.0;
  std::optional<double> fold_point;
  int fold_level = -1;
  std::optional<ContinuityReport> continuity;
  double lambda_next = 0.0;  // lambda(s_k, m_{k+1})
  std::size_t grid_points = 0;
};

struct FoldOptions {
  int stages = 3;
  double s_start = 1.0;
  SearchOptions search;
  /// Fold after the last stage too, so the terminal potential stands in for the limit.
  bool terminal_fold = true;
  /// Start in S_N by folding the smooth potential at this zero-touch level
  /// first; negative keeps the S_D start.
  int start_fold_level = -1;
};

struct FoldSequence {
  std::string instance;
  StepParams params;
  Coefficient c;
  Mesh mesh;
  double lambda_D = 0.0;
  double lambda_N = 0.0;
  double c_star = 0.0;
  std::vector<PiecewisePotential> potentials;  // m_1, m_2, ...
  std::vector<StageRecord> stages;

  const PiecewisePotential& terminal() const { return potentials.back(); }
  double gap() const { return lambda_D - lambda_N; }
};

/// Stage tolerance max(0.2 gap / k, 3 h_estimate), the h part applied per grid point.
double stage_tolerance(double gap, int k);

/// Alternating search-and-fold: stage k targets lambda_D on S_D potentials and
/// lambda_N on S_N ones, then folds at the first zero-touch point beyond
/// a - delta(s_k^{-2}).
FoldSequence construct_divergent(const Instance& instance, const FoldOptions& options = {});

struct DivergenceRow {
  double s = 0.0;
  double lambda = 0.0;
  double residual = 0.0;
  double h_estimate = 0.0;
  int stage = 0;          // k when s = s_k, otherwise 0
  double target = 0.0;    // stage target at markers
  double achieved = 0.0;  // lambda(s_k, m_k) at markers
};

/// lambda(s) of the terminal potential over `s_grid` merged with the stage strengths.
std::vector<DivergenceRow> divergence_table(const FoldSequence& seq, std::span<const double> s_grid,
                                            const SearchOptions& options = {});

void write_divergence_csv(std::ostream& out, const std::vector<DivergenceRow>& rows);
/// Line plot of lambda against log s with the two target levels.
void write_divergence_svg(std::ostream& out, const std::vector<DivergenceRow>& rows,
                          double lambda_D, double lambda_N);
/// Plain-text stage report.
void write_fold_report(std::ostream& out, const FoldSequence& seq);

}  // namespace oscdrift
