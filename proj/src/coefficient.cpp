#include "oscdrift/coefficient.hpp"

#include <algorithm>
#include <sstream>

#include "oscdrift/errors.hpp"

namespace oscdrift {

Coefficient constant_coefficient(double c0) {
  std::ostringstream d;
  d << "const " << c0;
  return Coefficient{[c0](double) { return c0; }, c0, c0, {}, d.str()};
}

Coefficient piecewise_linear(std::vector<double> xs, std::vector<double> ys,
                             std::string description) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw Error(ErrorKind::InvalidParams, "piecewise_linear needs matching, nonempty knots");
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw Error(ErrorKind::InvalidParams, "knots must increase");
  }
  Coefficient c;
  c.min = *std::min_element(ys.begin(), ys.end());
  c.max = *std::max_element(ys.begin(), ys.end());
  for (double x : xs) {
    if (x > 0.0 && x < 1.0) c.breakpoints.push_back(x);
  }
  c.description = std::move(description);
  c.fn = [xs = std::move(xs), ys = std::move(ys)](double r) {
    if (r <= xs.front()) return ys.front();
    if (r >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), r);
    const auto i = static_cast<std::size_t>(it - xs.begin());
    const double t = (r - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
  };
  return c;
}

Coefficient desk_profile(double a, double b, double c_out, double c_in, double ramp) {
  if (ramp < 0.0) ramp = (b - a) / 8.0;
  if (!(0.0 < a && a < b && b < 1.0) || !(2.0 * ramp < b - a)) {
    throw Error(ErrorKind::InvalidParams, "desk profile needs 0 < a < b < 1 and a ramp narrower than (b-a)/2");
  }
  std::ostringstream d;
  d << "desk c_out=" << c_out << " c_in=" << c_in << " ramp=" << ramp;
  return piecewise_linear({a, a + ramp, b - ramp, b}, {c_out, c_in, c_in, c_out}, d.str());
}

Coefficient shifted(const Coefficient& c, double shift) {
  Coefficient out = c;
  out.fn = [f = c.fn, shift](double r) { return f(r) + shift; };
  out.min += shift;
  out.max += shift;
  std::ostringstream d;
  d << c.description << " + " << shift;
  out.description = d.str();
  return out;
}

Coefficient negated(const Coefficient& c) {
  Coefficient out = c;
  out.fn = [f = c.fn](double r) { return -f(r); };
  out.min = -c.max;
  out.max = -c.min;
  out.description = "-(" + c.description + ")";
  return out;
}

}  // namespace oscdrift
