#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "oscdrift/eigen.hpp"
#include "oscdrift/errors.hpp"

using namespace oscdrift;

namespace {

constexpr double kPi = std::numbers::pi;

EigenProblem full_problem(const PiecewisePotential& m, const Coefficient& c, double s, int d = 1) {
  EigenProblem pb;
  pb.d = d;
  pb.s = s;
  pb.m = m;
  pb.c = c;
  return pb;
}

// Smallest eigenvalue of the pencil by a dense generalized solver in extended
// precision. The mass matrix is badly conditioned when s is large, so the
// reversed pencil (M, A) is solved instead and its largest eigenvalue inverted.
long double dense_smallest(const Pencil& p) {
  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const auto n = static_cast<Eigen::Index>(p.size());
  Mat A = Mat::Zero(n, n), M = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, i) = p.a_diag[i];
    M(i, i) = p.m_diag[i];
    if (i + 1 < n) {
      A(i, i + 1) = A(i + 1, i) = p.a_off[i];
      M(i, i + 1) = M(i + 1, i) = p.m_off[i];
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(M, A, Eigen::EigenvaluesOnly);
  return 1.0L / es.eigenvalues()(n - 1);
}

// Brute-force element integrals from the shape-function definitions, by
// composite Simpson on a very fine grid (only usable for moderate s).
FittedElement brute_element(const Piece& piece, const Element& e, double s, double r0,
                            const Coefficient& c) {
  const int n = 20000;
  const double len = e.length;
  std::vector<double> x(n + 1), mv(n + 1), E(n + 1);
  for (int i = 0; i <= n; ++i) {
    x[i] = len * i / n;
    mv[i] = piece.value(e.t0 + x[i] / piece.width);
    E[i] = std::exp(-2.0 * s * (mv[i] - mv[0]));
  }
  // cumulative trapezoid for B(x) = int_0^x E, refined by using many points
  std::vector<double> B(n + 1, 0.0);
  for (int i = 1; i <= n; ++i) B[i] = B[i - 1] + 0.5 * (E[i] + E[i - 1]) * (x[i] - x[i - 1]);
  const double I = B[n];
  double mll = 0, mlr = 0, mrr = 0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double psiL = (I - B[i]) / I, psiR = B[i] / I;
    const double weight = std::exp(2.0 * s * (mv[i] - mv[0]));
    // phi-space mass, then scaled to w_L = e^{s m_L} phi_L, w_R = e^{s m_R} phi_R
    mll += w * weight * psiL * psiL;
    mlr += w * weight * psiL * psiR;
    mrr += w * weight * psiR * psiR;
  }
  const double h3 = len / n / 3.0;
  const double dm = mv[n] - mv[0];
  FittedElement fe;
  fe.I = I;
  fe.m_ll = mll * h3;
  fe.m_lh = mlr * h3 * std::exp(-s * dm);
  fe.m_hh = mrr * h3 * std::exp(-2.0 * s * dm);
  (void)r0;
  (void)c;
  return fe;
}

}  // namespace

TEST_CASE("constant coefficient gives the exact eigenvalue") {
  const PiecewisePotential zero = zero_potential();
  const Mesh mesh = build_mesh(zero, 8, 1000);
  for (double s : {0.0, 10.0, 1e3}) {
    const EigenResult r = principal_eigenvalue(full_problem(zero, constant_coefficient(7.0), s), mesh);
    CHECK(std::abs(r.lambda - 7.0) <= 1e-10 * 7.0);
    CHECK(r.residual < 1e-10);
  }
  // The constant mode stays exact with a nontrivial potential.
  const PiecewisePotential m = smooth_md(fixtures::desk());
  const Mesh mm = build_mesh(m, 8, 20000);
  for (double s : {0.0, 3.0, 300.0}) {
    SolverOptions opt;
    opt.estimate_error = false;
    const EigenResult r = principal_eigenvalue(full_problem(m, constant_coefficient(7.0), s), mm, opt);
    CHECK(std::abs(r.lambda - 7.0) <= 1e-10 * 7.0);
  }
}

TEST_CASE("Dirichlet and Neumann references in closed form") {
  const PiecewisePotential zero = zero_potential(0.25, 0.75);
  const Mesh mesh = build_mesh(zero, 8, 10000);
  const ReferencePair rp = reference_pair(0.25, 0.75, constant_coefficient(0.0), 1, mesh);
  CHECK(std::abs(rp.extrapolated_D - 4.0 * kPi * kPi) <= 1e-6 * 4.0 * kPi * kPi);
  CHECK(std::abs(rp.lambda_N) <= 1e-10);

  const ReferencePair rq = reference_pair(0.25, 0.75, constant_coefficient(3.0), 1, mesh);
  CHECK(rq.lambda_N == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(rq.extrapolated_D == doctest::Approx(3.0 + 4.0 * kPi * kPi).epsilon(1e-6));
  for (double v : rq.phi_N) CHECK(v > 0.0);
  for (std::size_t i = 1; i + 1 < rq.phi_D.size(); ++i) CHECK(rq.phi_D[i] > 0.0);

  const ReferencePair r2 = reference_pair(0.25, 0.75, constant_coefficient(0.0), 2, mesh);
  CHECK(std::abs(r2.lambda_N) <= 1e-10);
  CHECK(r2.lambda_D > r2.lambda_N);
}

TEST_CASE("fitted element integrals match brute-force quadrature") {
  const PiecewisePotential m = smooth_md(fixtures::desk());
  const Mesh mesh = build_mesh(m, 8, 4000);
  const Coefficient c = constant_coefficient(1.0);
  int checked = 0;
  for (double s : {0.5, 20.0, 200.0}) {
    for (std::size_t i = 0; i < mesh.elements.size(); i += 37) {
      const Element& e = mesh.elements[i];
      const Piece& piece = m.pieces()[e.piece];
      if (!piece.increasing()) continue;  // the oracle assumes the low end on the left
      const FittedElement fe = fitted_element(piece, e, s, mesh.nodes[i], mesh.nodes[i + 1], &c);
      if (fe.f_total > 60.0) continue;
      const FittedElement bf = brute_element(piece, e, s, mesh.nodes[i], c);
      CHECK(fe.I == doctest::Approx(bf.I).epsilon(1e-7));
      CHECK(fe.m_ll == doctest::Approx(bf.m_ll).epsilon(1e-6));
      CHECK(fe.m_lh == doctest::Approx(bf.m_lh).epsilon(1e-6));
      CHECK(fe.m_hh == doctest::Approx(bf.m_hh).epsilon(1e-6));
      CHECK(fe.c_ref == 1.0);
      CHECK(fe.c_ll == 0.0);
      ++checked;
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("Sturm bisection agrees with a dense oracle") {
  const StepParams p = fixtures::desk();
  const PiecewisePotential m = smooth_md(p);
  MeshOptions mo;
  mo.p_min = 3;
  mo.base_intervals = 60;
  const Mesh mesh = build_mesh(m, mo);
  CHECK(mesh.size() < 700);
  const Coefficient c = desk_profile(p.a, p.b, 60.0);
  for (double s : {0.0, 0.7, 4.0, 25.0}) {
    const Pencil pencil = assemble(full_problem(m, c, s), mesh);
    SolverOptions opt;
    opt.estimate_error = false;
    const EigenResult r = solve_pencil(pencil, c.min - 1.0, c.max + 1.0, opt);
    const long double oracle = dense_smallest(pencil);
    CHECK(std::abs(r.lambda - static_cast<double>(oracle)) <= 1e-7 * std::abs(static_cast<double>(oracle)));
  }
}

TEST_CASE("shift invariance is bit-identical") {
  const PiecewisePotential m = smooth_md(fixtures::desk());
  const Mesh mesh = build_mesh(m, 8, 20000);
  const Coefficient c = desk_profile(0.35, 0.65, 50.0);
  SolverOptions opt;
  opt.estimate_error = false;
  const EigenResult r1 = principal_eigenvalue(full_problem(m, c, 40.0), mesh, opt);
  const EigenResult r2 = principal_eigenvalue(full_problem(m.shifted(3.25), c, 40.0), mesh, opt);
  CHECK(r1.lambda == r2.lambda);
}

TEST_CASE("mirroring the problem leaves the eigenvalue unchanged") {
  PotentialMeta meta;
  const PiecewisePotential m({Piece{0.0, 0.3, 0.3, PieceKind::Linear, -0.6, 0.0},
                              Piece{0.3, 1.0, 0.7, PieceKind::Linear, 0.35, -0.6}},
                             meta);
  std::vector<Piece> mirrored;
  for (auto it = m.pieces().rbegin(); it != m.pieces().rend(); ++it) mirrored.push_back(it->mirrored());
  const PiecewisePotential mr(mirrored, meta);
  const Coefficient c = piecewise_linear({0.0, 0.2, 1.0}, {1.0, 5.0, 2.0});
  const Coefficient cr = piecewise_linear({0.0, 0.8, 1.0}, {2.0, 5.0, 1.0});
  MeshOptions mo;
  mo.extra_breaks = {0.2};
  const Mesh mesh = build_mesh(m, mo);
  mo.extra_breaks = {0.8};
  const Mesh mesh_r = build_mesh(mr, mo);
  SolverOptions opt;
  opt.estimate_error = false;
  for (double s : {1.0, 30.0}) {
    const double l1 = principal_eigenvalue(full_problem(m, c, s), mesh, opt).lambda;
    const double l2 = principal_eigenvalue(full_problem(mr, cr, s), mesh_r, opt).lambda;
    CHECK(std::abs(l1 - l2) <= 1e-10 * std::abs(l1));
  }
}

TEST_CASE("eigenvector positivity, bounds and discrete minimality") {
  const StepParams p = fixtures::desk();
  const PiecewisePotential m = smooth_md(p);
  const Mesh mesh = build_mesh(m, 8, 20000);
  const Coefficient c = desk_profile(p.a, p.b, 80.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (double s : {0.0, 5.0, 500.0, 5e4}) {
    const EigenProblem pb = full_problem(m, c, s);
    const EigenResult r = principal_eigenvalue(pb, mesh);
    CHECK(r.lambda >= c.min * (1.0 - 1e-12) - r.h_estimate);
    CHECK(r.lambda <= c.max * (1.0 + 1e-12) + r.h_estimate);
    // deep in the decaying region entries may underflow to zero, never flip sign
    const bool representable = 2.0 * s * (m.max_value() - m.min_value()) < 600.0;
    for (double v : r.eigvec) CHECK((representable ? v > 0.0 : v >= 0.0));
    const Pencil pencil = assemble(pb, mesh);
    CHECK(rayleigh_quotient(r.eigvec, pencil) == doctest::Approx(r.lambda).epsilon(1e-9));
    for (int k = 0; k < 5; ++k) {
      std::vector<double> v = r.eigvec;
      for (double& x : v) x += 0.1 * g(rng) * x;
      CHECK(rayleigh_quotient(v, pencil) >= r.lambda * (1.0 - 1e-12));
    }
  }
  CHECK_THROWS_AS(rayleigh_quotient(std::vector<double>(mesh.size(), 0.0), assemble(full_problem(m, c, 1.0), mesh)), Error);
}

TEST_CASE("refinement decreases the discrete eigenvalue") {
  const StepParams p = fixtures::desk();
  const PiecewisePotential m = smooth_md(p);
  const Coefficient c = desk_profile(p.a, p.b, 80.0);
  SolverOptions opt;
  opt.estimate_error = false;
  for (double s : {2.0, 200.0}) {
    Mesh mesh = build_mesh(m, 4, 3000);
    double prev = principal_eigenvalue(full_problem(m, c, s), mesh, opt).lambda;
    double prev_diff = 1e300;
    for (int k = 0; k < 3; ++k) {
      mesh = refine(mesh);
      const double cur = principal_eigenvalue(full_problem(m, c, s), mesh, opt).lambda;
      CHECK(cur <= prev + 1e-12 * std::abs(prev));
      // the gaps contract until they reach rounding level
      CHECK(prev - cur < std::max(prev_diff, 1e-9 * std::abs(cur)));
      prev_diff = prev - cur;
      prev = cur;
    }
  }
}

TEST_CASE("weighted path for higher dimensions") {
  const PiecewisePotential m = smooth_md(fixtures::desk());
  const Mesh mesh = build_mesh(m, 8, 20000);
  const double osc = m.max_value() - m.min_value();
  EigenProblem pb = full_problem(m, constant_coefficient(2.0), 400.0 / (2.0 * osc), 3);
  CHECK_NOTHROW(assemble(pb, mesh));
  pb.s = 1e4 / (2.0 * osc);
  CHECK_THROWS_AS(assemble(pb, mesh), Error);
  pb.s = 5.0;
  const EigenResult r = principal_eigenvalue(pb, mesh);
  CHECK(r.lambda == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("Dirichlet test function certifies lambda_D independently of s") {
  const StepParams p = fixtures::desk();
  const PiecewisePotential m = smooth_md(p);
  const Mesh mesh = build_mesh(m, 8, 20000);
  const Coefficient c = desk_profile(p.a, p.b, 80.0);
  const ReferencePair rp = reference_pair(p.a, p.b, c, 1, mesh);
  const std::vector<double> phi0 = dirichlet_test_function(rp.phi_D, p.a, p.b, mesh);
  double first = 0.0;
  for (double s : {0.0, 1e3, 1e6}) {
    const EigenProblem pb = full_problem(m, c, s);
    const double rq = rayleigh_quotient(phi0, pb, mesh);
    if (s == 0.0) first = rq;
    CHECK(rq == doctest::Approx(rp.lambda_D).epsilon(1e-11));
    CHECK(rq == doctest::Approx(first).epsilon(1e-13));
    SolverOptions opt;
    opt.estimate_error = false;
    CHECK(rq >= principal_eigenvalue(pb, mesh, opt).lambda);
  }
}

TEST_CASE("staircase identities") {
  const StepParams p = fixtures::desk();
  for (double s : {0.0, 1.0, 50.0, 1e4, 1e7}) {
    const CertificateBundle cb = staircase(p, s, 30);
    for (std::size_t i = 0; i + 1 < cb.p.size(); ++i) {
      CHECK((cb.p[i] > 0.0 || cb.log_p[i] < -700.0));
      CHECK(cb.log_p[i] <= 0.0);
      CHECK(cb.log_p[i + 1] > cb.log_p[i]);
      if (cb.p[i] > 1e-300 && std::isfinite(cb.sigma[i])) {
        const double lhs = cb.p[i + 1] - cb.p[i];
        const double rhs = cb.sigma[i] * cb.p[i];
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(rhs), cb.p[i + 1]));
      }
    }
    if (s == 0.0) {
      double prod = 1.0;
      for (int k = 30; k >= 1; --k) {
        prod *= 1.0 + std::pow(p.alpha * p.beta, 0.5 * (k + p.l)) * std::exp((1.0 + p.nu) * 0.0);
      }
      double tail = 1.0;
      for (int k = 31; k < 400; ++k) tail *= 1.0 + std::pow(p.alpha * p.beta, 0.5 * (k + p.l));
      CHECK(cb.p[0] == doctest::Approx(1.0 / (prod * tail)).epsilon(1e-13));
    }
  }
  double prev = 1.0;
  for (double s = 1.0; s < 1e6; s *= 4.0) {
    const double p3 = staircase(p, s, 3).log_p[2];
    CHECK(p3 < prev);
    prev = p3;
  }
}
