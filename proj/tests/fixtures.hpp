#pragma once

#include "oscdrift/instances.hpp"

namespace fixtures {

inline oscdrift::StepParams example() { return oscdrift::example_params(); }
inline oscdrift::StepParams desk() { return oscdrift::desk_params(); }

}  // namespace fixtures
