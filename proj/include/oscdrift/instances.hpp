#pragma once

#include <string>

#include "oscdrift/coefficient.hpp"
#include "oscdrift/mesh.hpp"
#include "oscdrift/potential.hpp"

namespace oscdrift {

/// a = 41/84, h = 1/10, alpha = 1/8, beta = 1/4, nu = 2, l = 0 (delta = 1/84).
StepParams example_params();
/// Wider middle interval (0.35, 0.65) with l = 1; otherwise as example_params.
StepParams desk_params();

/// A ready-to-solve configuration: smooth potential, desk-shaped c calibrated so
/// that c_out = factor * lambda_D, the mesh, and both reference eigenvalues.
struct Instance {
  std::string name;
  StepParams params;
  PiecewisePotential m;
  Coefficient c;
  Mesh mesh;
  double c_out = 0.0;
  double lambda_D = 0.0;
  double lambda_N = 0.0;
};

struct InstanceOptions {
  double c_in = 1.0;
  double factor = 1.5;
  MeshOptions mesh;
};

/// Calibrates c_out: start from factor * (c_in + pi^2 / (b - a)^2), solve
/// lambda_D with that profile, set c_out = factor * lambda_D and solve again.
Instance make_instance(const std::string& name, const StepParams& params,
                       const InstanceOptions& options = {});
/// Same, with a fixed reaction coefficient (no calibration); its kinks join the mesh.
Instance make_instance(const std::string& name, const StepParams& params, const Coefficient& c,
                       const MeshOptions& mesh = {});
Instance desk_instance(const InstanceOptions& options = {});
Instance example_instance(const InstanceOptions& options = {});

}  // namespace oscdrift
