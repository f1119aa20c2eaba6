#include "oscdrift/instances.hpp"

#include <cmath>
#include <numbers>

#include "oscdrift/eigen.hpp"
#include "oscdrift/errors.hpp"

namespace oscdrift {

StepParams example_params() { return StepParams::make(41.0 / 84.0, 0.1, 0.125, 0.25, 2.0, 0); }

StepParams desk_params() { return StepParams::make(0.35, 0.1, 0.125, 0.25, 2.0, 1); }

Instance make_instance(const std::string& name, const StepParams& params,
                       const InstanceOptions& options) {
  Instance inst;
  inst.name = name;
  inst.params = params;
  inst.m = smooth_md(params);
  const double a = params.a, b = params.b;
  const double width = b - a;

  // The ramp kinks do not depend on c_out, so one mesh serves every profile.
  MeshOptions mo = options.mesh;
  const Coefficient probe = desk_profile(a, b, 2.0 * options.c_in + 1.0, options.c_in);
  mo.extra_breaks.insert(mo.extra_breaks.end(), probe.breakpoints.begin(), probe.breakpoints.end());
  inst.mesh = build_mesh(inst.m, mo);

  SolverOptions so;
  so.estimate_error = false;
  double c_out = options.factor * (options.c_in + std::numbers::pi * std::numbers::pi / (width * width));
  ReferencePair ref;
  for (int pass = 0; pass < 2; ++pass) {
    inst.c = desk_profile(a, b, c_out, options.c_in);
    ref = reference_pair(a, b, inst.c, 1, inst.mesh, so);
    if (pass == 0) c_out = options.factor * ref.lambda_D;
  }
  if (!(c_out > ref.lambda_D)) {
    throw Error(ErrorKind::InvalidParams, "calibrated c_out does not exceed lambda_D");
  }
  inst.c_out = c_out;
  inst.lambda_D = ref.lambda_D;
  inst.lambda_N = ref.lambda_N;
  return inst;
}

Instance make_instance(const std::string& name, const StepParams& params, const Coefficient& c,
                       const MeshOptions& mesh) {
  Instance inst;
  inst.name = name;
  inst.params = params;
  inst.m = smooth_md(params);
  inst.c = c;
  MeshOptions mo = mesh;
  mo.extra_breaks.insert(mo.extra_breaks.end(), c.breakpoints.begin(), c.breakpoints.end());
  inst.mesh = build_mesh(inst.m, mo);
  SolverOptions so;
  so.estimate_error = false;
  const ReferencePair ref = reference_pair(params.a, params.b, c, 1, inst.mesh, so);
  inst.c_out = c.max;
  inst.lambda_D = ref.lambda_D;
  inst.lambda_N = ref.lambda_N;
  return inst;
}

Instance desk_instance(const InstanceOptions& options) {
  return make_instance("desk", desk_params(), options);
}

Instance example_instance(const InstanceOptions& options) {
  return make_instance("example", example_params(), options);
}

}  // namespace oscdrift
