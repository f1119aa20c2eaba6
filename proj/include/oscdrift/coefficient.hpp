#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace oscdrift {

/// Reaction coefficient c(r) on [0, 1]. Carries its bounds and the kinks a mesh
/// should resolve; evaluation is thread-safe as long as `fn` is.
struct Coefficient {
  std::function<double(double)> fn;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> breakpoints;  // interior kinks, increasing
  std::string description;

  double operator()(double r) const { return fn(r); }
  bool is_constant() const { return min == max; }
};

Coefficient constant_coefficient(double c0);

/// Piecewise-linear interpolant through (xs[i], ys[i]); constant beyond the ends.
Coefficient piecewise_linear(std::vector<double> xs, std::vector<double> ys,
                             std::string description = "piecewise-linear");

/// c_out outside (a, b), linear ramps of width `ramp` down to c_in inside.
Coefficient desk_profile(double a, double b, double c_out, double c_in = 1.0,
                         double ramp = -1.0);

/// Returns c + shift (min, max and kinks follow).
Coefficient shifted(const Coefficient& c, double shift);

/// Returns -c.
Coefficient negated(const Coefficient& c);

}  // namespace oscdrift
