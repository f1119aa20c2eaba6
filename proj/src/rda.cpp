#include "oscdrift/rda.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "oscdrift/eigen.hpp"
#include "oscdrift/errors.hpp"
#include "quadrature.hpp"

namespace oscdrift {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sample_points(const SigmaProfile& sigma, double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i <= n; ++i) xs.push_back(lo + (hi - lo) * i / n);
  for (double k : sigma.breakpoints) {
    if (k >= lo && k <= hi) xs.push_back(k);
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

double sample_max(const SigmaProfile& sigma, double lo, double hi) {
  double best = -std::numeric_limits<double>::infinity();
  for (double x : sample_points(sigma, lo, hi, 4096)) best = std::max(best, sigma(x));
  return best;
}

double integral(const SigmaProfile& sigma, double lo, double hi) {
  std::vector<double> cuts{lo};
  for (double k : sigma.breakpoints) {
    if (k > lo && k < hi) cuts.push_back(k);
  }
  cuts.push_back(hi);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const int panels = 64;
    for (int p = 0; p < panels; ++p) {
      const double x0 = cuts[i] + (cuts[i + 1] - cuts[i]) * p / panels;
      const double x1 = cuts[i] + (cuts[i + 1] - cuts[i]) * (p + 1) / panels;
      sum += detail::gauss8([&](double x) { return sigma(x); }, x0, x1);
    }
  }
  return sum;
}

ClauseReport clause(std::string name, double margin, std::string detail = {}) {
  return {std::move(name), margin > 0.0, margin, std::move(detail)};
}

/// log of the integral over [t0, t1] (local coordinates of p) of exp(k (v(t) - v*)) dr,
/// v* being the end value that maximizes k v. Also returns that end in `t_star`.
double log_integral(const Piece& p, double t0, double t1, double k, double& t_star) {
  const double span = k * p.difference(t0, t1);
  t_star = span >= 0.0 ? t1 : t0;
  const double t_far = span >= 0.0 ? t0 : t1;
  const double total = std::abs(span);
  const double ts = t_star;
  auto integrand = [&](double t) { return std::exp(k * p.difference(ts, t)); };
  if (total <= 1.0) {
    return std::log(detail::gauss8(integrand, std::min(t0, t1), std::max(t0, t1)) * p.width);
  }
  // Panels at exponent levels -1, -2, ... from the peak end; past -40 one more
  // panel covers the remainder.
  const int levels = static_cast<int>(std::min(40.0, std::floor(total)));
  auto drop = [&](double t) { return -k * p.difference(ts, t); };  // >= 0, grows away from t_star
  double sum = 0.0, prev = t_star;
  for (int j = 1; j <= levels; ++j) {
    const double next = detail::bisect_level(drop, static_cast<double>(j), std::min(t_star, t_far),
                                             std::max(t_star, t_far), t_far > t_star);
    sum += detail::gauss8(integrand, std::min(prev, next), std::max(prev, next));
    prev = next;
  }
  sum += detail::gauss8(integrand, std::min(prev, t_far), std::max(prev, t_far));
  return std::log(sum * p.width);
}

double log_add(double x, double y) {
  const double hi = std::max(x, y), lo = std::min(x, y);
  if (lo == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(lo - hi));
}

/// Off-diagonal rates of the semi-discrete operator: du_i/dt = left[i] (u_{i-1} - u_i)
/// + right[i] (u_{i+1} - u_i). Edge flux (u_j - u_i) / int_e e^{-2sm}, cell weight
/// int_cell e^{2sm}; both are kept relative to local values of m.
void sg_rates(const PiecewisePotential& m, double s, const Mesh& mesh, std::vector<double>& left,
              std::vector<double>& right) {
  const std::size_t n = mesh.size();
  const std::size_t ne = mesh.elements.size();
  left.assign(n, 0.0);
  right.assign(n, 0.0);
  const double k = 2.0 * s;

  // Per element: log int e^{-2s(m - m_min)}, which end is the minimum, and m_max - m_min.
  std::vector<double> log_flux(ne), rise(ne);
  std::vector<bool> min_at_left(ne);
  // Per node: log int over the cell of e^{2s(m - m_i)}.
  std::vector<double> log_cell(n, -std::numeric_limits<double>::infinity());

  for (std::size_t e = 0; e < ne; ++e) {
    const Element& el = mesh.elements[e];
    const Piece& p = m.pieces()[el.piece];
    const double dv = p.difference(el.t0, el.t1);  // m(x_{e+1}) - m(x_e)
    rise[e] = std::abs(dv);
    double t_star = 0.0;
    if (k == 0.0 || dv == 0.0) {
      log_flux[e] = std::log(el.length);
      min_at_left[e] = true;
    } else {
      log_flux[e] = log_integral(p, el.t0, el.t1, -k, t_star);
      min_at_left[e] = t_star == el.t0;
    }
    // Half cells: left half belongs to node e, right half to node e + 1.
    const double tm = 0.5 * (el.t0 + el.t1);
    const double halves[2][2] = {{el.t0, tm}, {tm, el.t1}};
    for (int h = 0; h < 2; ++h) {
      const double a0 = halves[h][0], a1 = halves[h][1];
      const double t_node = h == 0 ? el.t0 : el.t1;
      double li;
      if (k == 0.0 || dv == 0.0) {
        li = std::log(0.5 * el.length);
      } else {
        li = log_integral(p, a0, a1, k, t_star);
        li += k * p.difference(t_node, t_star);  // relative to m at the node
      }
      log_cell[e + static_cast<std::size_t>(h)] = log_add(log_cell[e + static_cast<std::size_t>(h)], li);
    }
  }
  for (std::size_t e = 0; e < ne; ++e) {
    // Node e (left end) and node e + 1 (right end); exponent 2s (m_min - m_node) <= 0.
    const double drop_left = min_at_left[e] ? 0.0 : -k * rise[e];
    const double drop_right = min_at_left[e] ? -k * rise[e] : 0.0;
    right[e] = std::exp(drop_left - log_flux[e] - log_cell[e]);
    left[e + 1] = std::exp(drop_right - log_flux[e] - log_cell[e + 1]);
  }
}

/// LU factors of the tridiagonal I - h L, reused while h stays fixed.
struct Tridiag {
  std::vector<double> mult, inv_diag, upper;

  void factor(const std::vector<double>& left, const std::vector<double>& right, double h) {
    const std::size_t n = left.size();
    mult.assign(n, 0.0);
    inv_diag.assign(n, 0.0);
    upper.assign(n, 0.0);
    double d = 1.0 + h * (left[0] + right[0]);
    inv_diag[0] = 1.0 / d;
    for (std::size_t i = 1; i < n; ++i) {
      upper[i - 1] = -h * right[i - 1];
      mult[i] = -h * left[i] * inv_diag[i - 1];
      d = 1.0 + h * (left[i] + right[i]) - mult[i] * upper[i - 1];
      inv_diag[i] = 1.0 / d;
    }
  }

  void solve(std::vector<double>& rhs) const {
    const std::size_t n = rhs.size();
    for (std::size_t i = 1; i < n; ++i) rhs[i] -= mult[i] * rhs[i - 1];
    rhs[n - 1] *= inv_diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) * inv_diag[i];
  }
};

double sup_norm(std::span<const double> u) {
  double best = 0.0;
  for (double v : u) best = std::max(best, std::abs(v));
  return best;
}

double mass_of(std::span<const double> u, const Mesh& mesh) {
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    sum += 0.5 * mesh.elements[e].length * (u[e] + u[e + 1]);
  }
  return sum;
}

}  // namespace

double SigmaProfile::max_inner() const { return sample_max(*this, a, b); }
double SigmaProfile::max_all() const { return sample_max(*this, 0.0, 1.0); }

double sigma_example(double x) {
  const double r = x <= 0.5 ? x : 1.0 - x;
  if (r < 0.25) return -96.0;
  if (r < 9.0 / 32.0) return 3072.0 * r - 864.0;
  const double d = r - 0.5;
  return -512.0 * d * d + 24.5;
}

SigmaProfile sigma_example_profile() {
  SigmaProfile p;
  p.fn = sigma_example;
  p.a = 0.25;
  p.b = 0.75;
  p.breakpoints = {0.25, 9.0 / 32.0, 23.0 / 32.0, 0.75};
  p.description = "example";
  return p;
}

SigmaProfile constant_sigma(double value, double a, double b) {
  SigmaProfile p;
  p.fn = [value](double) { return value; };
  p.a = a;
  p.b = b;
  std::ostringstream d;
  d << "const:" << value;
  p.description = d.str();
  return p;
}

SigmaProfile shifted(const SigmaProfile& sigma, double shift) {
  SigmaProfile p = sigma;
  p.fn = [f = sigma.fn, shift](double x) { return f(x) + shift; };
  std::ostringstream d;
  d << sigma.description << " + " << shift;
  p.description = d.str();
  return p;
}

Coefficient reaction_coefficient(const SigmaProfile& sigma) {
  Coefficient c;
  c.fn = [f = sigma.fn](double x) { return -f(x); };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : sample_points(sigma, 0.0, 1.0, 4096)) {
    lo = std::min(lo, -sigma(x));
    hi = std::max(hi, -sigma(x));
  }
  c.min = lo;
  c.max = hi;
  for (double k : sigma.breakpoints) {
    if (k > 0.0 && k < 1.0) c.breakpoints.push_back(k);
  }
  c.description = "-sigma(" + sigma.description + ")";
  return c;
}

Report validate_sigma(const SigmaProfile& sigma, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParams, "eps must be positive");
  const double a = sigma.a, b = sigma.b;
  Report rep;

  const double mass = integral(sigma, a, b);
  {
    std::ostringstream d;
    d << "int_a^b sigma = " << mass;
    rep.clauses.push_back(clause("positive mass on (a, b)", mass, d.str()));
  }
  {
    const double star = sigma.max_inner();
    const double margin = kPi * kPi / ((b - a) * (b - a)) - star;
    std::ostringstream d;
    d << "sigma* = " << star;
    rep.clauses.push_back(clause("sigma* below pi^2/(b-a)^2", margin, d.str()));
  }

  // Sign pattern: negative on [a, a + eps) and (b - eps, b], one sign change on
  // each side, positive in between.
  {
    const std::vector<double> xs = sample_points(sigma, a, b, 8192);
    const double half = 0.5 * (b - a);
    double edge = 0.0;  // largest offset from the nearer end with sigma <= 0
    for (double x : xs) {
      if (sigma(x) <= 0.0) edge = std::max(edge, std::min(x - a, b - x));
    }
    std::string detail = "ok";
    bool pass = edge < half;
    if (!pass) detail = "sigma is not positive in the middle";
    for (double x : xs) {
      const double off = std::min(x - a, b - x);
      if (off < eps && sigma(x) >= 0.0) {
        pass = false;
        detail = "sigma >= 0 within eps of an end";
      } else if (off < edge && sigma(x) > 0.0) {
        pass = false;
        detail = "more than one sign change";
      }
    }
    std::ostringstream d;
    d << detail << "; last sign change at offset " << edge;
    rep.clauses.push_back({"sign pattern near a and b", pass, edge - eps, d.str()});
  }

  {
    const double width = b - a - 4.0 * eps;
    std::ostringstream d;
    if (!(width > 0.0)) {
      d << "b - a - 4 eps = " << width << " <= 0";
      rep.clauses.push_back(clause("outside bound", -1.0, d.str()));
    } else {
      const double bound = (32.0 / 3.0) / (width * width);
      const double sa = sigma(a), sb = sigma(b);
      const double tol = 1e-12 * std::max(1.0, std::abs(sa));
      double worst = -std::numeric_limits<double>::infinity();
      for (double x : sample_points(sigma, 0.0, a, 4096)) worst = std::max(worst, sigma(x) - sa);
      for (double x : sample_points(sigma, b, 1.0, 4096)) worst = std::max(worst, sigma(x) - sb);
      const double margin = -bound - sa;
      // sigma(x) <= sigma(a) outside: the example is constant there, so equality is allowed
      const bool pass = margin > 0.0 && worst <= tol && std::abs(sa - sb) <= tol;
      d << "sigma(a) = " << sa << ", -(32/3)(b-a-4eps)^-2 = " << -bound << ", max(sigma - sigma(a)) outside = "
        << worst;
      rep.clauses.push_back({"outside bound", pass, margin, d.str()});
    }
  }
  return rep;
}

SigmaEigenReport sigma_eigen_check(const SigmaProfile& sigma, double eps, std::size_t intervals) {
  const double a = sigma.a, b = sigma.b;
  const double width = b - a - 4.0 * eps;
  if (!(eps > 0.0) || !(width > 0.0)) throw Error(ErrorKind::InvalidParams, "need 0 < 4 eps < b - a");
  const double ramp = 0.375 * width;
  const double p0 = a + 2.0 * eps, p1 = p0 + ramp, q1 = b - 2.0 * eps - ramp, q0 = b - 2.0 * eps;
  if (!(p1 < q1)) throw Error(ErrorKind::InvalidParams, "test function ramps overlap");

  MeshOptions mo;
  mo.base_intervals = intervals;
  mo.extra_breaks = {p0, p1, q1, q0};
  for (double k : sigma.breakpoints) mo.extra_breaks.push_back(k);
  const Mesh mesh = build_mesh(zero_potential(a, b), mo);
  const Coefficient c = reaction_coefficient(sigma);

  SigmaEigenReport out;
  const ReferencePair ref = reference_pair(a, b, c, 1, mesh);
  out.lambda_N = ref.lambda_N;
  out.lambda_D = ref.lambda_D;
  out.h_estimate_N = ref.h_estimate_N;
  out.h_estimate_D = ref.h_estimate_D;

  out.outside_min = std::numeric_limits<double>::infinity();
  for (double x : sample_points(sigma, 0.0, a, 4096)) out.outside_min = std::min(out.outside_min, -sigma(x));
  for (double x : sample_points(sigma, b, 1.0, 4096)) out.outside_min = std::min(out.outside_min, -sigma(x));

  // 0 up to a + 2 eps, linear ramp, 1 in the middle, mirrored.
  const Mesh sub = submesh(mesh, a, b);
  std::vector<double> v;
  for (std::size_t i = 1; i + 1 < sub.size(); ++i) {
    const double x = sub.nodes[i];
    double y = 1.0;
    if (x <= p0 || x >= q0) y = 0.0;
    else if (x < p1) y = (x - p0) / ramp;
    else if (x > q1) y = (q0 - x) / ramp;
    v.push_back(y);
  }
  EigenProblem pb;
  pb.d = 1;
  pb.c = c;
  pb.m = zero_potential();
  pb.domain = Domain::SubDirichlet;
  pb.a = a;
  pb.b = b;
  out.certificate = rayleigh_quotient(v, pb, mesh);
  out.certificate_bound = (32.0 / 3.0) / (width * width);
  out.slack = std::max(ref.h_estimate_D, 1e-9 * out.certificate_bound);

  auto num = [](double x) {
    std::ostringstream d;
    d << std::setprecision(10) << x;
    return d.str();
  };
  out.report.clauses.push_back(clause("lambda_N < 0", -out.lambda_N, "lambda_N = " + num(out.lambda_N)));
  out.report.clauses.push_back(clause("lambda_D > 0", out.lambda_D, "lambda_D = " + num(out.lambda_D)));
  out.report.clauses.push_back(clause("lambda_D below -sigma outside", out.outside_min - out.lambda_D,
                                      "min -sigma outside = " + num(out.outside_min)));
  out.report.clauses.push_back(clause("plateau test function bound",
                                      out.certificate_bound + out.slack - out.certificate,
                                      "quotient = " + num(out.certificate) + ", bound = " +
                                          num(out.certificate_bound)));
  out.report.clauses.push_back(clause("quotient above lambda_D",
                                      out.certificate - out.lambda_D + 1e-12 * std::abs(out.lambda_D),
                                      "quotient - lambda_D = " + num(out.certificate - out.lambda_D)));
  return out;
}

std::vector<double> default_initial_state(const Mesh& mesh) {
  std::vector<double> u(mesh.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = 0.1 * (1.0 + std::cos(2.0 * kPi * mesh.nodes[i])) / 2.0 + 0.05;
  }
  return u;
}

RdaSummary rda_run(const PiecewisePotential& m, double s, const SigmaProfile& sigma,
                   std::span<const double> u0, const Mesh& mesh, const RdaOptions& options) {
  const std::size_t n = mesh.size();
  if (u0.size() != n) throw Error(ErrorKind::InvalidParams, "initial state does not match the mesh");
  bool positive = false;
  for (double v : u0) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidParams, "initial state must be >= 0");
    positive = positive || v > 0.0;
  }
  if (!positive) throw Error(ErrorKind::ZeroFunction, "initial state vanishes");
  if (!(options.t_max > 0.0)) throw Error(ErrorKind::InvalidParams, "t_max must be positive");

  std::vector<double> left, right;
  sg_rates(m, s, mesh, left, right);
  std::vector<double> sig(n);
  for (std::size_t i = 0; i < n; ++i) sig[i] = sigma(mesh.nodes[i]);

  RdaSummary out;
  double dt = options.dt;
  if (!(dt > 0.0)) {
    // the splitting error grows with the spread of sigma, so the reaction scale caps the step
    double top = 0.0;
    for (double v : sig) top = std::max(top, std::abs(v));
    dt = (sigma.b - sigma.a) * (sigma.b - sigma.a) / 50.0;
    if (top > 0.0) dt = std::min(dt, 0.01 / top);
  }
  dt = std::min(dt, options.t_max);
  std::vector<double> u(u0.begin(), u0.end()), star(n);
  out.min_value = *std::min_element(u.begin(), u.end());
  out.max_value = sup_norm(u);

  const double sample_every = options.t_max / static_cast<double>(std::max<std::size_t>(options.samples, 1));
  double next_sample = 0.0;
  double t = 0.0;
  std::vector<double> snapshot;
  const double snapshot_time = 0.8 * options.t_max;
  auto record = [&] {
    RdaSample smp;
    smp.t = t;
    smp.sup_norm = sup_norm(u);
    smp.mass = mass_of(u, mesh);
    if (!out.series.empty() && smp.t > out.series.back().t && smp.sup_norm > 0.0 &&
        out.series.back().sup_norm > 0.0) {
      smp.rate_estimate = std::log(smp.sup_norm / out.series.back().sup_norm) / (smp.t - out.series.back().t);
    }
    out.series.push_back(smp);
  };
  record();
  next_sample += sample_every;

  std::vector<double> growth(n), gain(n);
  Tridiag lu;
  double cached_h = -1.0;
  while (t < options.t_max * (1.0 - 1e-14)) {
    const double h = std::min(dt, options.t_max - t);
    if (h != cached_h) {
      // exact flow of u' = u (sigma - u) over h: u e^{sigma h} / (1 + u g)
      for (std::size_t i = 0; i < n; ++i) {
        growth[i] = std::exp(sig[i] * h);
        gain[i] = sig[i] == 0.0 ? h : std::expm1(sig[i] * h) / sig[i];
      }
      lu.factor(left, right, h);
      cached_h = h;
    }
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      star[i] = u[i] * growth[i] / (1.0 + u[i] * gain[i]);
      if (!(star[i] >= 0.0)) ok = false;
    }
    if (!ok) {
      if (out.halvings >= options.max_halvings) {
        std::ostringstream msg;
        msg << "reaction step loses positivity at t = " << t << " with dt = " << h;
        throw Error(ErrorKind::StepUnstable, msg.str());
      }
      dt *= 0.5;
      ++out.halvings;
      continue;
    }
    lu.solve(star);
    u.swap(star);
    t += h;
    double lo = u[0], hi = u[0];
    for (double v : u) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw Error(ErrorKind::StepUnstable, "non-finite state");
    out.min_value = std::min(out.min_value, lo);
    out.max_value = std::max(out.max_value, hi);
    if (snapshot.empty() && t >= snapshot_time) snapshot = u;
    if (t >= next_sample * (1.0 - 1e-12)) {
      record();
      while (next_sample <= t * (1.0 + 1e-12)) next_sample += sample_every;
    }
  }
  if (out.series.back().t < t) record();
  out.t_final = t;
  out.dt = dt;

  // Least-squares slope of log sup over the last 20% of the run.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const RdaSample& smp : out.series) {
    if (smp.t < snapshot_time || !(smp.sup_norm > 0.0)) continue;
    const double y = std::log(smp.sup_norm);
    sx += smp.t;
    sy += y;
    sxx += smp.t * smp.t;
    sxy += smp.t * y;
    ++cnt;
  }
  if (cnt >= 2) {
    const double den = cnt * sxx - sx * sx;
    out.rate = den > 0.0 ? (cnt * sxy - sx * sy) / den : 0.0;
  }
  if (snapshot.empty()) snapshot = u;
  double diff = 0.0;
  for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(u[i] - snapshot[i]));
  const double top = sup_norm(u);
  out.relative_change = top > 0.0 ? diff / top : 0.0;
  out.final_state = std::move(u);
  return out;
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Persistence: return "persistence";
    case Verdict::Extinction: return "extinction";
    case Verdict::Undecided: return "undecided";
  }
  return "?";
}

Verdict classify(const RdaSummary& summary) {
  const double sup = summary.series.empty() ? 0.0 : summary.series.back().sup_norm;
  if (sup < 1e-8 && summary.rate < -1e-3) return Verdict::Extinction;
  if (summary.relative_change < 1e-6 && sup > 1e-3) return Verdict::Persistence;
  return Verdict::Undecided;
}

Verdict predicted_verdict(double lambda1) {
  if (lambda1 < 0.0) return Verdict::Persistence;
  if (lambda1 > 0.0) return Verdict::Extinction;
  return Verdict::Undecided;
}

void write_trajectory_csv(std::ostream& out, const RdaSummary& summary) {
  out << "t,sup_norm,mass,rate_estimate\n" << std::setprecision(17);
  for (const RdaSample& s : summary.series) {
    out << s.t << ',' << s.sup_norm << ',' << s.mass << ',' << s.rate_estimate << '\n';
  }
}

void write_phase_csv(std::ostream& out, const std::vector<PhasePoint>& points) {
  out << "s,lambda1,verdict\n" << std::setprecision(17);
  for (const PhasePoint& p : points) out << p.s << ',' << p.lambda1 << ',' << to_string(p.verdict) << '\n';
}

StepParams rda_params() { return StepParams::make(0.25, 0.1, 0.125, 0.25, 2.0, 1); }

}  // namespace oscdrift
