#include "oscdrift/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oscdrift/errors.hpp"
#include "quadrature.hpp"

namespace oscdrift {

namespace {

using detail::gauss8;
using detail::kGaussW;
using detail::kGaussX;

// Contributions below e^{-kCutoff} relative to the element scale are dropped.
constexpr double kCutoff = 80.0;

// Panel breakpoints where an exponent crosses 1, 2, 4, ..., kCutoff, so that
// each panel sees the exponential vary by at most e^2.
std::vector<double> exponent_levels(double total, double cutoff) {
  std::vector<double> levels;
  if (total > 1.0) levels.push_back(1.0);
  for (double v = 2.0; v <= cutoff && v < total; v += 2.0) levels.push_back(v);
  return levels;
}

struct OrientedElement {
  const Piece* piece;
  double t_low, t_high;
  double length;
  double s;
  bool increasing;

  double t_at(double u) const {
    const double dt = u / piece->width;
    return increasing ? t_low + dt : t_low - dt;
  }
  // 2 s (m(u) - m_low) and 2 s (m_high - m(u)), both >= 0.
  double F(double u) const { return std::max(0.0, 2.0 * s * piece->difference(t_low, t_at(u))); }
  double G(double u) const { return std::max(0.0, 2.0 * s * piece->difference(t_at(u), t_high)); }
};

struct Node {
  double u, weight, F, G, E, A, B;
};

}  // namespace

double FittedElement::k_ll() const { return 1.0 / I; }
double FittedElement::k_lh() const { return -std::exp(-0.5 * f_total) / I; }
double FittedElement::k_hh() const { return std::exp(-f_total) / I; }

FittedElement fitted_element(const Piece& piece, const Element& element, double s, double r_left,
                             double r_right, const Coefficient* c) {
  FittedElement fe;
  fe.length = element.length;
  fe.low_is_left = piece.increasing();
  OrientedElement el{&piece,
                     fe.low_is_left ? element.t0 : element.t1,
                     fe.low_is_left ? element.t1 : element.t0,
                     element.length,
                     s,
                     fe.low_is_left};
  fe.f_total = std::max(0.0, 2.0 * s * piece.difference(el.t_low, el.t_high));
  const double len = element.length;

  std::vector<double> cuts{0.0, len};
  if (fe.f_total > 1.0) {
    for (const double level : exponent_levels(fe.f_total, kCutoff)) {
      cuts.push_back(detail::bisect_level([&](double u) { return el.F(u); }, level, 0.0, len, true));
      cuts.push_back(detail::bisect_level([&](double u) { return el.G(u); }, level, 0.0, len, false));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [len](double x, double y) { return y - x <= 1e-15 * len; }),
               cuts.end());
    cuts.back() = len;
  }

  // Panels deep inside the layer, where both exponents exceed the cutoff, carry
  // nothing at working precision.
  struct Panel {
    double lo, hi, integral;
  };
  std::vector<Panel> panels;
  bool has_middle = false;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    if (el.F(lo) >= kCutoff - 0.5 && el.G(hi) >= kCutoff - 0.5) {
      has_middle = true;
      continue;
    }
    panels.push_back({lo, hi, 0.0});
  }

  const auto E = [&](double u) { return std::exp(-el.F(u)); };
  std::vector<Node> nodes;
  nodes.reserve(8 * panels.size());
  for (Panel& p : panels) {
    const double half = 0.5 * (p.hi - p.lo), mid = 0.5 * (p.hi + p.lo);
    for (int q = 0; q < 8; ++q) {
      Node n;
      n.u = mid + half * kGaussX[q];
      n.weight = half * kGaussW[q];
      n.F = el.F(n.u);
      n.G = el.G(n.u);
      n.E = std::exp(-n.F);
      n.A = gauss8(E, n.u, p.hi);
      n.B = gauss8(E, p.lo, n.u);
      p.integral += n.weight * n.E;
      nodes.push_back(n);
    }
  }
  // Turn the in-panel partial integrals into cumulative ones.
  double before = 0.0;
  for (std::size_t k = 0; k < panels.size(); ++k) {
    for (int q = 0; q < 8; ++q) nodes[8 * k + q].B += before;
    before += panels[k].integral;
  }
  const double I = before;
  double after = 0.0;
  for (std::size_t k = panels.size(); k-- > 0;) {
    for (int q = 0; q < 8; ++q) nodes[8 * k + q].A += after;
    after += panels[k].integral;
  }
  fe.I = I;

  fe.c_ref = c ? (*c)(0.5 * (r_left + r_right)) : 0.0;
  const double cross_scale = has_middle ? 0.0 : std::exp(-0.5 * fe.f_total);
  const double inv_i2 = 1.0 / (I * I);
  for (const Node& n : nodes) {
    const double r = fe.low_is_left ? r_left + n.u : r_right - n.u;
    const double cv = c ? (*c)(std::clamp(r, r_left, r_right)) - fe.c_ref : 0.0;
    const double ratio_b = n.B / I;
    double ll = 0.0, lh = 0.0, hh = 0.0;
    if (!has_middle || n.F < kCutoff) {
      const double a_hat = n.A * std::exp(n.F);
      ll = n.weight * a_hat * a_hat * n.E * inv_i2;
      lh = n.weight * a_hat * ratio_b / I * cross_scale;
    }
    if (!has_middle || n.G < kCutoff) hh = n.weight * std::exp(-n.G) * ratio_b * ratio_b;
    fe.m_ll += ll;
    fe.m_lh += lh;
    fe.m_hh += hh;
    fe.c_ll += cv * ll;
    fe.c_lh += cv * lh;
    fe.c_hh += cv * hh;
  }
  return fe;
}

double Pencil::energy(std::span<const double> v) const {
  double sum = 0.0;
  for (const ElementForm& f : elements) {
    const double vi = f.i >= 0 ? v[static_cast<std::size_t>(f.i)] : 0.0;
    const double vj = f.j >= 0 ? v[static_cast<std::size_t>(f.j)] : 0.0;
    const double diff = f.fi * vi - f.fj * vj;
    sum += f.coef * diff * diff + f.cref * (f.mii * vi * vi + 2.0 * f.mij * vi * vj + f.mjj * vj * vj) +
           f.cii * vi * vi + 2.0 * f.cij * vi * vj + f.cjj * vj * vj;
  }
  return sum;
}

double Pencil::mass(std::span<const double> v) const {
  double sum = 0.0;
  for (const ElementForm& f : elements) {
    const double vi = f.i >= 0 ? v[static_cast<std::size_t>(f.i)] : 0.0;
    const double vj = f.j >= 0 ? v[static_cast<std::size_t>(f.j)] : 0.0;
    sum += f.mii * vi * vi + 2.0 * f.mij * vi * vj + f.mjj * vj * vj;
  }
  return sum;
}

void Pencil::shifted(double x, std::vector<double>& diag, std::vector<double>& off) const {
  diag.assign(size(), 0.0);
  off.assign(size() > 0 ? size() - 1 : 0, 0.0);
  for (const ElementForm& f : elements) {
    const double g = f.cref - x;
    if (f.i >= 0) diag[f.i] += f.coef * f.fi * f.fi + f.cii + g * f.mii;
    if (f.j >= 0) diag[f.j] += f.coef * f.fj * f.fj + f.cjj + g * f.mjj;
    if (f.i >= 0 && f.j >= 0) off[std::min(f.i, f.j)] += -f.coef * f.fi * f.fj + f.cij + g * f.mij;
  }
}

Mesh problem_mesh(const EigenProblem& problem, const Mesh& mesh) {
  if (problem.domain == Domain::Full) return mesh;
  return submesh(mesh, problem.a, problem.b);
}

namespace {

void check_problem(const EigenProblem& problem) {
  if (problem.d < 1) throw Error(ErrorKind::InvalidParams, "dimension must be >= 1");
  if (!(problem.s >= 0.0)) throw Error(ErrorKind::InvalidParams, "s must be nonnegative");
  if (!problem.c.fn) throw Error(ErrorKind::InvalidParams, "coefficient c is not set");
  if (problem.domain != Domain::Full && !(0.0 <= problem.a && problem.a < problem.b && problem.b <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "sub-interval needs 0 <= a < b <= 1");
  }
}

void check_layout(const Piece& piece, const Element& e) {
  if (piece.lo != e.piece_lo || piece.width != e.piece_width) {
    throw Error(ErrorKind::InvalidParams, "mesh was built for a potential with a different piece layout");
  }
}

void check_mass(const Pencil& pencil) {
  for (std::size_t i = 0; i < pencil.m_diag.size(); ++i) {
    if (!(pencil.m_diag[i] > 0.0)) {
      throw Error(ErrorKind::SingularMass, "mass entry " + std::to_string(i) + " is not positive");
    }
  }
}

void add_element(Pencil& p, const ElementForm& f) {
  const auto in = [&](std::ptrdiff_t k) { return k >= 0; };
  const double kii = f.coef * f.fi * f.fi, kjj = f.coef * f.fj * f.fj, kij = -f.coef * f.fi * f.fj;
  if (in(f.i)) {
    p.a_diag[f.i] += kii + f.cii + f.cref * f.mii;
    p.m_diag[f.i] += f.mii;
  }
  if (in(f.j)) {
    p.a_diag[f.j] += kjj + f.cjj + f.cref * f.mjj;
    p.m_diag[f.j] += f.mjj;
  }
  if (in(f.i) && in(f.j)) {
    const std::ptrdiff_t k = std::min(f.i, f.j);
    p.a_off[k] += kij + f.cij + f.cref * f.mij;
    p.m_off[k] += f.mij;
  }
  p.elements.push_back(f);
}

Pencil empty_pencil(std::size_t n) {
  Pencil p;
  p.a_diag.assign(n, 0.0);
  p.m_diag.assign(n, 0.0);
  p.a_off.assign(n > 0 ? n - 1 : 0, 0.0);
  p.m_off.assign(n > 0 ? n - 1 : 0, 0.0);
  return p;
}

Pencil assemble_fitted(const EigenProblem& problem, const Mesh& mesh) {
  const auto pieces = problem.m.pieces();
  Pencil p = empty_pencil(mesh.size());
  for (std::size_t i = 0; i < mesh.elements.size(); ++i) {
    const Element& e = mesh.elements[i];
    check_layout(pieces[e.piece], e);
    const FittedElement fe = fitted_element(pieces[e.piece], e, problem.s, mesh.nodes[i],
                                            mesh.nodes[i + 1], &problem.c);
    const auto left = static_cast<std::ptrdiff_t>(i);
    ElementForm f;
    f.i = fe.low_is_left ? left : left + 1;
    f.j = fe.low_is_left ? left + 1 : left;
    f.coef = 1.0 / fe.I;
    f.fi = 1.0;
    f.fj = std::exp(-0.5 * fe.f_total);
    f.mii = fe.m_ll;
    f.mij = fe.m_lh;
    f.mjj = fe.m_hh;
    f.cref = fe.c_ref;
    f.cii = fe.c_ll;
    f.cij = fe.c_lh;
    f.cjj = fe.c_hh;
    add_element(p, f);
  }
  return p;
}

// P1 elements with weight r^{d-1} e^{2 s (m - m_ref)}.
Pencil assemble_weighted(const EigenProblem& problem, const Mesh& mesh, bool with_potential) {
  const auto pieces = problem.m.pieces();
  double m_ref = 0.0;
  double s = 0.0;
  if (with_potential && problem.s > 0.0) {
    s = problem.s;
    m_ref = problem.m.max_value() - problem.m.offset();
    const double range = 2.0 * s * (problem.m.max_value() - problem.m.min_value());
    if (range > problem.range_budget) {
      std::ostringstream msg;
      msg << "2 s osc(m) = " << range << " exceeds the weighted-path budget "
          << problem.range_budget;
      throw Error(ErrorKind::DynamicRangeExceeded, msg.str());
    }
  }
  const int power = problem.d - 1;
  Pencil p = empty_pencil(mesh.size());
  for (std::size_t i = 0; i < mesh.elements.size(); ++i) {
    const Element& e = mesh.elements[i];
    const Piece* piece_ptr = nullptr;
    if (with_potential) {
      check_layout(pieces[e.piece], e);
      piece_ptr = &pieces[e.piece];
    }
    const double r0 = mesh.nodes[i];
    const double len = e.length;
    const auto exponent = [&](double u) {
      if (s == 0.0) return 0.0;
      return 2.0 * s * (piece_ptr->value(e.t0 + u / piece_ptr->width) - m_ref);
    };

    std::vector<double> cuts{0.0, len};
    const double swing = std::abs(exponent(len) - exponent(0.0));
    if (swing > 2.0) {
      const double base = exponent(0.0);
      for (double v = 2.0; v < swing; v += 2.0) {
        cuts.push_back(detail::bisect_level(
            [&](double u) { return std::abs(exponent(u) - base); }, v, 0.0, len, true));
      }
      std::sort(cuts.begin(), cuts.end());
    }

    const double cref = problem.c(0.5 * (r0 + mesh.nodes[i + 1]));
    double w0 = 0.0, wll = 0.0, wlr = 0.0, wrr = 0.0, cll = 0.0, clr = 0.0, crr = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double lo = cuts[k], hi = cuts[k + 1];
      const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
      for (int q = 0; q < 8; ++q) {
        const double u = mid + half * kGaussX[q];
        const double r = std::clamp(r0 + u, r0, mesh.nodes[i + 1]);
        const double xi = u / len;
        double weight = half * kGaussW[q] * std::exp(exponent(u));
        if (power > 0) weight *= std::pow(r, power);
        const double cv = problem.c(r) - cref;
        w0 += weight;
        wll += weight * (1.0 - xi) * (1.0 - xi);
        wlr += weight * xi * (1.0 - xi);
        wrr += weight * xi * xi;
        cll += cv * weight * (1.0 - xi) * (1.0 - xi);
        clr += cv * weight * xi * (1.0 - xi);
        crr += cv * weight * xi * xi;
      }
    }
    ElementForm f;
    f.i = static_cast<std::ptrdiff_t>(i);
    f.j = f.i + 1;
    f.coef = w0 / (len * len);
    f.mii = wll;
    f.mij = wlr;
    f.mjj = wrr;
    f.cref = cref;
    f.cii = cll;
    f.cij = clr;
    f.cjj = crr;
    add_element(p, f);
  }
  return p;
}

}  // namespace

Pencil assemble(const EigenProblem& problem, const Mesh& mesh) {
  check_problem(problem);
  Pencil pencil;
  if (problem.domain == Domain::Full) {
    pencil = problem.d == 1 ? assemble_fitted(problem, mesh) : assemble_weighted(problem, mesh, true);
  } else {
    pencil = assemble_weighted(problem, problem_mesh(problem, mesh), false);
    if (problem.domain == Domain::SubDirichlet) {
      if (pencil.size() < 3) throw Error(ErrorKind::InvalidParams, "sub-interval has no interior nodes");
      const auto last = static_cast<std::ptrdiff_t>(pencil.size()) - 1;
      pencil.a_diag = {pencil.a_diag.begin() + 1, pencil.a_diag.end() - 1};
      pencil.m_diag = {pencil.m_diag.begin() + 1, pencil.m_diag.end() - 1};
      pencil.a_off = {pencil.a_off.begin() + 1, pencil.a_off.end() - 1};
      pencil.m_off = {pencil.m_off.begin() + 1, pencil.m_off.end() - 1};
      for (ElementForm& f : pencil.elements) {
        f.i = (f.i == 0 || f.i == last) ? -1 : f.i - 1;
        f.j = (f.j == 0 || f.j == last) ? -1 : f.j - 1;
      }
    }
  }
  check_mass(pencil);
  return pencil;
}

}  // namespace oscdrift
