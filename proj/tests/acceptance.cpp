// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oscdrift/errors.hpp"
#include "oscdrift/fold.hpp"
#include "oscdrift/hypotheses.hpp"
#include "oscdrift/instances.hpp"
#include "oscdrift/rda.hpp"

using namespace oscdrift;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator<<(const T& v) {
    out_ << v;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

EigenProblem full_problem(const PiecewisePotential& m, const Coefficient& c, double s) {
  EigenProblem pb;
  pb.m = m;
  pb.c = c;
  pb.s = s;
  return pb;
}

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

const Instance& desk() {
  static const Instance inst = desk_instance();
  return inst;
}

const FoldSequence& desk_sequence() {
  static const FoldSequence seq = construct_divergent(desk());
  return seq;
}

/// Desk potential folded at its second zero-touch point; the envelope is two levels deeper.
PiecewisePotential desk_sn() { return fold(desk().m, desk().m.meta().zero_touch.at(1)); }

Outcome constant_coefficient_exact() {
  const auto t0 = Clock::now();
  const PiecewisePotential zero = zero_potential();
  MeshOptions mo;
  mo.base_intervals = 999;
  const Mesh mesh = build_mesh(zero, mo);
  double worst = 0.0;
  for (double s : {0.0, 10.0, 1e3}) {
    worst = std::max(worst, rel(principal_eigenvalue(full_problem(zero, constant_coefficient(7.0), s), mesh).lambda, 7.0));
  }
  const double secs = seconds_since(t0);
  Detail d;
  d << "nodes " << mesh.size() << ", worst rel err " << worst << ", " << secs << " s";
  return {worst <= 1e-10 && secs < 0.1, d.str()};
}

Outcome dirichlet_closed_form() {
  const PiecewisePotential zero = zero_potential(0.25, 0.75);
  MeshOptions mo;
  mo.base_intervals = 9999;
  const Mesh mesh = build_mesh(zero, mo);
  const ReferencePair rp = reference_pair(0.25, 0.75, constant_coefficient(0.0), 1, mesh);
  const double exact = 4.0 * std::numbers::pi * std::numbers::pi;
  const double err = rel(rp.extrapolated_D, exact);
  Detail d;
  d << "nodes " << mesh.size() << ", extrapolated " << rp.extrapolated_D << ", rel err " << err;
  return {err <= 1e-6, d.str()};
}

Outcome bounds_and_ordering() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int done = 0, resampled = 0, failures = 0;
  double worst_bound = -1e300, min_gap = 1e300;
  while (done < 200) {
    const double beta = 0.1 + 0.6 * u(rng);
    const double alpha = beta * (0.1 + 0.8 * u(rng));
    const double h = alpha * (0.1 + 0.8 * u(rng));
    const double nu = 1.05 + 3.0 * u(rng);
    const int l = static_cast<int>(3 * u(rng));
    const double a = 0.25 + 0.2 * u(rng);
    StepParams p;
    try {
      p = StepParams::make(a, h, alpha, beta, nu, l);
    } catch (const Error&) {
      ++resampled;
      continue;
    }
    Truncation tr;
    tr.min_width = 1e-6;
    const PiecewisePotential m = smooth_md(p, tr);
    const double c_in = 0.5 + 4.0 * u(rng);
    const double c_out = 2.0 * (c_in + std::pow(std::numbers::pi / (p.b - p.a), 2)) * (1.0 + 3.0 * u(rng));
    const Coefficient c = desk_profile(p.a, p.b, c_out, c_in);
    MeshOptions mo;
    mo.p_min = 4;
    mo.base_intervals = 1000;
    mo.extra_breaks = c.breakpoints;
    const Mesh mesh = build_mesh(m, mo);
    SolverOptions ro;
    ro.estimate_error = false;
    const ReferencePair rp = reference_pair(p.a, p.b, c, 1, mesh, ro);
    if (!validate_hypotheses(m, c, rp.lambda_D).pass()) {
      ++resampled;
      continue;
    }
    const double s = std::pow(10.0, -1.0 + 5.0 * u(rng));
    const EigenResult r = principal_eigenvalue(full_problem(m, c, s), mesh);
    const double excess = std::max(c.min - r.lambda, r.lambda - c.max) - r.h_estimate;
    worst_bound = std::max(worst_bound, excess);
    min_gap = std::min(min_gap, rp.lambda_D - rp.lambda_N);
    if (excess > 0.0 || !(rp.lambda_D > rp.lambda_N)) ++failures;
    ++done;
  }
  const double secs = seconds_since(t0);
  Detail d;
  d << done << " fixtures (" << resampled << " resampled), failures " << failures << ", worst bound excess "
    << worst_bound << ", min lambda_D - lambda_N " << min_gap << ", " << secs << " s";
  return {failures == 0 && secs < 60.0, d.str()};
}

Outcome convergence(const PiecewisePotential& m, double target, const char* label) {
  const auto t0 = Clock::now();
  const Instance& inst = desk();
  const double gap = inst.lambda_D - inst.lambda_N;
  const std::vector<double> grid = geometric_grid(1.0, 1e5, 11);
  const std::vector<SweepPoint> pts = sweep(m, inst.c, grid, inst.mesh);
  bool decreasing = true;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (!(std::abs(pts[i].result.lambda - target) < std::abs(pts[i - 1].result.lambda - target))) decreasing = false;
  }
  const EigenResult& last = pts.back().result;
  const double allowed = std::max(1e-2, 3.0 * last.h_estimate) * gap;
  const double dist = std::abs(last.lambda - target);
  const double secs = seconds_since(t0);
  Detail d;
  d << label << " " << target << ", lambda(1e5) " << last.lambda << ", distance/gap " << dist / gap
    << (decreasing ? ", monotone" : ", NOT monotone") << ", " << secs << " s";
  return {decreasing && dist <= allowed && secs < 300.0, d.str()};
}

Outcome divergence() {
  const auto t0 = Clock::now();
  const FoldSequence& seq = desk_sequence();
  const double secs = seconds_since(t0);
  const double mid = 0.5 * (seq.lambda_D + seq.lambda_N);
  bool ok = seq.stages.size() == 3;
  double prev = 0.0;
  Detail d;
  d << "s/lambda:";
  for (const StageRecord& st : seq.stages) {
    ok = ok && st.s > prev && ((st.k % 2 == 1) ? st.lambda > mid : st.lambda < mid);
    prev = st.s;
    d << " (" << st.s << ", " << st.lambda << ")";
  }
  const double jump = ok ? std::abs(seq.stages[0].lambda - seq.stages[1].lambda) : 0.0;
  ok = ok && jump > 0.5 * seq.gap();
  d << ", |lambda1 - lambda2|/gap " << jump / seq.gap() << ", " << secs << " s";
  return {ok && secs < 900.0, d.str()};
}

Outcome continuity() {
  const Instance& inst = desk();
  const FoldSequence& seq = desk_sequence();
  int checked = 0, failed = 0;
  double worst = 0.0;  // largest lhs / rhs
  for (const StageRecord& st : seq.stages) {
    if (!st.continuity) continue;
    ++checked;
    if (!st.continuity->pass) ++failed;
    if (st.continuity->rhs > 0.0) worst = std::max(worst, st.continuity->lhs / st.continuity->rhs);
  }
  const int transitions = checked;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& touch = inst.m.meta().zero_touch;
  for (int trial = 0; trial < 50; ++trial) {
    const int base_level = static_cast<int>(u(rng) * 3);
    PiecewisePotential m1 = base_level == 0 ? inst.m : fold(inst.m, touch.at(base_level));
    PiecewisePotential m2;
    if (trial % 2 == 0) {
      m2 = m1.scaled(1.0 + std::pow(10.0, -4.0 + 3.0 * u(rng)));
    } else {
      m2 = fold(m1, touch.at(static_cast<std::size_t>(base_level + 1 + static_cast<int>(u(rng) * 3))));
    }
    const double s = std::pow(10.0, -1.0 + 3.0 * u(rng));
    const EigenResult r1 = principal_eigenvalue(full_problem(m1, inst.c, s), inst.mesh);
    const EigenResult r2 = principal_eigenvalue(full_problem(m2, inst.c, s), inst.mesh);
    const ContinuityReport cr =
        continuity_certificate(s, m1, m2, inst.c.max, r1.lambda, r2.lambda, solve_slack(r1, r2));
    ++checked;
    if (!cr.pass) ++failed;
    if (cr.rhs > 0.0) worst = std::max(worst, cr.lhs / cr.rhs);
  }
  Detail d;
  d << transitions << " stage transitions + 50 random pairs, failures " << failed << ", worst lhs/rhs " << worst;
  return {failed == 0 && checked == transitions + 50, d.str()};
}

Outcome test_functions() {
  const Instance& inst = desk();
  const StepParams& p = inst.params;
  const ReferencePair rp = reference_pair(p.a, p.b, inst.c, 1, inst.mesh);
  const std::vector<double> phi0 = dirichlet_test_function(rp.phi_D, p.a, p.b, inst.mesh);
  double lo = 1e300, hi = -1e300;
  for (double s : {1.0, 1e2, 1e4, 1e5}) {
    const double rq = rayleigh_quotient(phi0, full_problem(inst.m, inst.c, s), inst.mesh);
    lo = std::min(lo, rq);
    hi = std::max(hi, rq);
  }
  const double slack = std::max(rp.h_estimate_D, 1e-12 * rp.lambda_D);
  const bool dirichlet_ok = std::abs(lo - rp.lambda_D) <= slack && std::abs(hi - rp.lambda_D) <= slack;

  const double gap = rp.lambda_D - rp.lambda_N;
  const double s_max = 1e5;
  const PiecewisePotential sn = desk_sn();
  const EigenProblem pb = full_problem(sn, inst.c, s_max);
  const double rq_n =
      rayleigh_quotient(neumann_test_function(p.shifted(2, false), s_max, rp.phi_N, pb, inst.mesh), pb, inst.mesh);
  const bool staircase_ok = rq_n >= rp.lambda_N && rq_n - rp.lambda_N <= 0.1 * gap;

  double worst_identity = 0.0;
  bool increasing = true;
  for (double s : {1.0, 1e2, 1e4, 1e5}) {
    const CertificateBundle cb = staircase(p, s, 30);
    for (std::size_t i = 0; i + 1 < cb.p.size(); ++i) {
      if (!(cb.log_p[i + 1] > cb.log_p[i])) increasing = false;
      if (cb.p[i] > 1e-300 && std::isfinite(cb.sigma[i])) {
        const double lhs = cb.p[i + 1] - cb.p[i];
        const double rhs = cb.sigma[i] * cb.p[i];
        worst_identity = std::max(worst_identity, std::abs(lhs - rhs) / std::max(std::abs(rhs), cb.p[i + 1]));
      }
    }
  }
  Detail d;
  d << "Dirichlet RQ in [" << lo << ", " << hi << "] vs " << rp.lambda_D << "; staircase RQ at s=1e5 "
    << rq_n << " ((rq - lambda_N)/gap " << (rq_n - rp.lambda_N) / gap << "); identity rel err " << worst_identity
    << (increasing ? ", p increasing" : ", p NOT increasing");
  return {dirichlet_ok && staircase_ok && increasing && worst_identity <= 1e-12, d.str()};
}

Outcome sigma_lemma() {
  const auto t0 = Clock::now();
  const SigmaEigenReport r = sigma_eigen_check(sigma_example_profile(), 1.0 / 48.0);
  const double secs = seconds_since(t0);
  Detail d;
  d << "lambda_N " << r.lambda_N << ", lambda_D " << r.lambda_D << ", outside " << r.outside_min
    << ", quotient " << r.certificate << " <= " << r.certificate_bound << " + " << r.slack;
  for (const ClauseReport& c : r.report.clauses) d << "; " << c.name << " margin " << c.margin;
  d << ", " << secs << " s";
  const bool chain = r.lambda_N < 0.0 && 0.0 < r.lambda_D && r.lambda_D < 96.0;
  return {r.report.pass() && chain && r.certificate <= r.certificate_bound + r.slack && secs < 10.0, d.str()};
}

Outcome advection_extinction() {
  const SigmaProfile sg = sigma_example_profile();
  const PiecewisePotential lin = linear_potential(-1.0);
  MeshOptions mo;
  mo.base_intervals = 2000;
  mo.extra_breaks = sg.breakpoints;
  const Mesh mesh = build_mesh(lin, mo);
  const Coefficient c = reaction_coefficient(sg);
  const std::vector<double> grid = geometric_grid(1.0, 1e3, 7);
  const std::vector<SweepPoint> pts = sweep(lin, c, grid, mesh);
  const double lambda = pts.back().result.lambda;
  const double target = -sg(0.0);
  RdaOptions opt;
  opt.t_max = 1.0;
  const RdaSummary run = rda_run(lin, grid.back(), sg, default_initial_state(mesh), mesh, opt);
  const Verdict v = classify(run);
  Detail d;
  d << "lambda_1: ";
  for (const SweepPoint& sp : pts) d << sp.result.lambda << " ";
  d << "(target " << target << ", rel " << rel(lambda, target) << "), rda at s=1e3 " << to_string(v)
    << " rate " << run.rate;
  return {rel(lambda, target) <= 0.02 && v == Verdict::Extinction, d.str()};
}

Outcome rda_pipeline() {
  const auto t0 = Clock::now();
  const SigmaProfile sg = sigma_example_profile();
  const Instance inst = make_instance("rda", rda_params(), reaction_coefficient(sg));
  FoldOptions fo;
  fo.stages = 2;
  fo.start_fold_level = 0;
  const FoldSequence seq = construct_divergent(inst, fo);
  if (seq.stages.size() != 2) return {false, "fold produced fewer than two stages"};
  const StageRecord& s1 = seq.stages[0];
  const StageRecord& s2 = seq.stages[1];
  const PiecewisePotential& m1 = seq.potentials[0];
  const PiecewisePotential& m2 = seq.potentials[1];

  RdaOptions opt;
  opt.t_max = 5.0;
  const RdaSummary r1 = rda_run(m1, s1.s, sg, default_initial_state(seq.mesh), seq.mesh, opt);
  const RdaSummary r2 = rda_run(m2, s2.s, sg, default_initial_state(seq.mesh), seq.mesh, opt);
  std::vector<double> small = default_initial_state(seq.mesh);
  for (double& v : small) v *= 1e-4;
  const RdaSummary r3 = rda_run(m2, s2.s, sg, small, seq.mesh, opt);
  const double secs = seconds_since(t0);

  const Verdict v1 = classify(r1), v2 = classify(r2);
  const bool ok = s1.lambda < 0.0 && s2.lambda > 0.0 && v1 == Verdict::Persistence && v2 == Verdict::Extinction &&
                  rel(-r3.rate, s2.lambda) <= 0.1 && secs < 600.0;
  Detail d;
  d << "stage 1 s " << s1.s << " lambda " << s1.lambda << " -> " << to_string(v1) << "; stage 2 s " << s2.s
    << " lambda " << s2.lambda << " -> " << to_string(v2) << "; small-u0 rate " << r3.rate << " vs "
    << -s2.lambda << "; " << secs << " s";
  return {ok, d.str()};
}

/// Dense oracle: Jacobi-scaled pencil in long double, full spectrum.
long double dense_smallest(const Pencil& p) {
  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const auto n = static_cast<Eigen::Index>(p.size());
  Mat A = Mat::Zero(n, n), M = Mat::Zero(n, n);
  std::vector<long double> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d[i] = 1.0L / std::sqrt(static_cast<long double>(p.m_diag[i]));
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, i) = p.a_diag[i] * d[i] * d[i];
    M(i, i) = p.m_diag[i] * d[i] * d[i];
    if (i + 1 < n) {
      A(i, i + 1) = A(i + 1, i) = p.a_off[i] * d[i] * d[i + 1];
      M(i, i + 1) = M(i + 1, i) = p.m_off[i] * d[i] * d[i + 1];
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, M, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  std::size_t max_nodes = 0;
  for (int k = 0; k < 20; ++k) {
    const StepParams p = k % 2 ? desk_params() : example_params();
    Truncation tr;
    tr.min_width = 1e-3;
    const PiecewisePotential m = smooth_md(p, tr);
    const Coefficient c = desk_profile(p.a, p.b, 20.0 + 200.0 * u(rng), 1.0 + 5.0 * u(rng));
    MeshOptions mo;
    mo.p_min = 4;
    mo.base_intervals = 100 + 40 * static_cast<std::size_t>(k % 5);
    mo.extra_breaks = c.breakpoints;
    const Mesh mesh = build_mesh(m, mo);
    const double s = k < 4 ? 0.0 : std::pow(10.0, -1.0 + 3.0 * u(rng));
    const Pencil pencil = assemble(full_problem(m, c, s), mesh);
    SolverOptions opt;
    opt.estimate_error = false;
    const double lambda = solve_pencil(pencil, c.min - 1.0, c.max + 1.0, opt).lambda;
    const long double ref = dense_smallest(pencil);
    worst = std::max(worst, static_cast<double>(std::abs((lambda - ref) / ref)));
    max_nodes = std::max(max_nodes, mesh.size());
  }
  Detail d;
  d << "20 fixtures up to " << max_nodes << " nodes, worst rel diff " << worst;
  return {worst <= 1e-10 && max_nodes <= 2000, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"constant coefficient exactness", constant_coefficient_exact},
      {"closed-form Dirichlet reference", dirichlet_closed_form},
      {"bounds and ordering", bounds_and_ordering},
      {"S_D convergence", [] { return convergence(desk().m, desk().lambda_D, "target lambda_D"); }},
      {"S_N convergence", [] { return convergence(desk_sn(), desk().lambda_N, "target lambda_N"); }},
      {"divergence by folding", divergence},
      {"continuity certificate", continuity},
      {"test-function certificates", test_functions},
      {"sub-interval eigenvalue chain for sigma", sigma_lemma},
      {"extinction under strong drift", advection_extinction},
      {"persistence then extinction along the fold", rda_pipeline},
      {"dense oracle equivalence", oracle_equivalence},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::printf("%s %2d %s: %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", index, name, out.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", index - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
