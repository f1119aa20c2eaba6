#pragma once

#include "oscdrift/coefficient.hpp"
#include "oscdrift/potential.hpp"

namespace oscdrift {

/// Checks the standing hypotheses on (m, c) for the interval (a, b) recorded in
/// m's metadata: symmetry m(r) = m(1 - r), m = 0 on [a, b], c > 0 on [0, 1] and
/// min c over [0, a] and [b, 1] above lambda_D. One clause per check, with margins.
Report validate_hypotheses(const PiecewisePotential& m, const Coefficient& c, double lambda_D);

}  // namespace oscdrift
