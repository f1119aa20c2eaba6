#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oscdrift/coefficient.hpp"
#include "oscdrift/mesh.hpp"
#include "oscdrift/potential.hpp"

namespace oscdrift {

enum class Domain { Full, SubDirichlet, SubNeumann };

/// -phi'' - (d-1)/r phi' - 2 s m' phi' + c phi = lambda phi with Neumann data on
/// (0, 1), or the advection-free problem on (a, b) with Dirichlet or Neumann data.
struct EigenProblem {
  int d = 1;
  double s = 0.0;
  PiecewisePotential m;
  Coefficient c;
  Domain domain = Domain::Full;
  double a = 0.0;  // sub-interval ends; ignored for Domain::Full
  double b = 1.0;
  double range_budget = 600.0;  // max 2 s (max m - min m) on the weighted path

  bool fitted() const noexcept { return domain == Domain::Full && d == 1; }
};

/// Element contribution kept in factored form: the stiffness energy is
/// coef * (fi v_i - fj v_j)^2, so quadratic forms can be evaluated without the
/// cancellation of the assembled matrix. The reaction part is cref * mass plus
/// the deviation integrals c.. of (c - cref); where c is constant they vanish
/// and A - x M is formed as stiffness + (cref - x) M. Index -1 marks an
/// eliminated node.
struct ElementForm {
  std::ptrdiff_t i = -1, j = -1;
  double coef = 0.0, fi = 1.0, fj = 1.0;
  double mii = 0.0, mij = 0.0, mjj = 0.0;
  double cref = 0.0;
  double cii = 0.0, cij = 0.0, cjj = 0.0;
};

/// Symmetric tridiagonal pencil (A, M) with A = stiffness + reaction.
struct Pencil {
  std::vector<double> a_diag, a_off;
  std::vector<double> m_diag, m_off;
  std::vector<ElementForm> elements;

  std::size_t size() const noexcept { return a_diag.size(); }
  /// v^T A v and v^T M v summed element by element.
  double energy(std::span<const double> v) const;
  double mass(std::span<const double> v) const;
  /// Tridiagonal A - x M assembled element by element.
  void shifted(double x, std::vector<double>& diag, std::vector<double>& off) const;
};

/// Integrals of one fitted element, oriented from its low-m end to its high-m end.
/// Entries are in the scaled unknowns w = e^{s m} phi; f_total = 2 s (m_high - m_low).
struct FittedElement {
  bool low_is_left = true;
  double f_total = 0.0;
  double length = 0.0;
  double I = 0.0;  // integral of e^{-2 s (m - m_low)}
  double m_ll = 0.0, m_lh = 0.0, m_hh = 0.0;
  double c_ref = 0.0;                       // c at the element midpoint
  double c_ll = 0.0, c_lh = 0.0, c_hh = 0.0;  // integrals of (c - c_ref) against the shapes

  double k_ll() const;
  double k_lh() const;
  double k_hh() const;
};

/// Exponentially fitted element integrals: the shape functions solve
/// (e^{2 s m} psi')' = 0, so steep layers inside an element are integrated
/// exactly up to quadrature. `c` may be null.
FittedElement fitted_element(const Piece& piece, const Element& element, double s, double r_left,
                             double r_right, const Coefficient* c);

/// Full problem, d = 1: fitted Ritz-Galerkin pencil in the scaled unknowns w.
/// Full problem, d >= 2: P1 pencil with weight r^{d-1} e^{2 s (m - max m)}.
/// Sub-interval problems: P1 pencil on the nodes in [a, b] with weight r^{d-1};
/// Dirichlet ends are removed from the unknowns.
Pencil assemble(const EigenProblem& problem, const Mesh& mesh);

/// The mesh actually carrying the unknowns: the full mesh, or the [a, b] part.
Mesh problem_mesh(const EigenProblem& problem, const Mesh& mesh);

}  // namespace oscdrift
