#include "oscdrift/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace oscdrift {
namespace {

constexpr int kSamples = 4096;

std::vector<double> sample_points(const PiecewisePotential& m, const Coefficient& c) {
  std::vector<double> r;
  r.reserve(kSamples + 4 * m.pieces().size() + c.breakpoints.size() + 1);
  for (int i = 0; i <= kSamples; ++i) r.push_back(static_cast<double>(i) / kSamples);
  for (const Piece& p : m.pieces()) {
    r.push_back(p.lo);
    r.push_back(p.lo + 0.25 * (p.hi - p.lo));
    r.push_back(0.5 * (p.lo + p.hi));
    r.push_back(p.lo + 0.75 * (p.hi - p.lo));
  }
  r.insert(r.end(), c.breakpoints.begin(), c.breakpoints.end());
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

std::string where(double r) {
  std::ostringstream s;
  s.precision(17);
  s << "at r = " << r;
  return s.str();
}

}  // namespace

Report validate_hypotheses(const PiecewisePotential& m, const Coefficient& c, double lambda_D) {
  const double a = m.meta().a, b = m.meta().b;
  const std::vector<double> r = sample_points(m, c);
  const double scale = std::max(m.max_abs(), 1e-300);
  Report report;

  {
    // 1 - r is rounded, so each sample is allowed one ulp of r times the slope.
    ClauseReport cl{"H1 symmetry", true, 0.0, ""};
    double worst = -1.0;
    for (double x : r) {
      const double diff = std::abs(m.value(x) - m.value(1.0 - x));
      const double tol = 1e-12 * scale + 4e-16 * std::abs(m.derivative(x));
      const double excess = (diff - tol) / scale;
      if (excess > worst) {
        worst = excess;
        if (excess > 0.0) cl.detail = "m(r) != m(1-r) " + where(x);
      }
    }
    cl.margin = -worst;
    cl.pass = worst <= 0.0;
    report.clauses.push_back(cl);
  }
  {
    ClauseReport cl{"m vanishes on [a, b]", true, 0.0, ""};
    double worst = 0.0;
    for (double x : r) {
      if (x < a || x > b) continue;
      const double v = std::abs(m.value(x));
      if (v > worst) {
        worst = v;
        cl.detail = "|m| = " + std::to_string(v) + " " + where(x);
      }
    }
    cl.pass = worst == 0.0;
    cl.margin = -worst;
    report.clauses.push_back(cl);
  }
  {
    ClauseReport cl{"c positive", true, 0.0, ""};
    double lowest = c.min;
    for (double x : r) lowest = std::min(lowest, c(x));
    cl.margin = lowest;
    cl.pass = lowest > 0.0;
    if (!cl.pass) cl.detail = "min c = " + std::to_string(lowest);
    report.clauses.push_back(cl);
  }
  {
    ClauseReport cl{"H2 c > lambda_D outside (a, b)", true, 0.0, ""};
    double lowest = INFINITY;
    double at = 0.0;
    for (double x : r) {
      if (x > a && x < b) continue;
      const double v = c(x);
      if (v < lowest) {
        lowest = v;
        at = x;
      }
    }
    for (double x : {a, b}) {
      if (c(x) < lowest) {
        lowest = c(x);
        at = x;
      }
    }
    cl.margin = lowest - lambda_D;
    cl.pass = cl.margin > 0.0;
    std::ostringstream s;
    s << "min c = " << lowest << " " << where(at) << ", lambda_D = " << lambda_D;
    cl.detail = s.str();
    report.clauses.push_back(cl);
  }
  return report;
}

}  // namespace oscdrift
