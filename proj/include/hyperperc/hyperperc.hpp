#pragma once

#include "hyperperc/errors.hpp"
#include "hyperperc/lattice.hpp"
#include "hyperperc/field.hpp"
#include "hyperperc/cluster.hpp"
#include "hyperperc/lifting.hpp"
#include "hyperperc/plane.hpp"
#include "hyperperc/parallel.hpp"
#include "hyperperc/stats.hpp"
#include "hyperperc/renorm.hpp"

namespace hyperperc {

inline constexpr const char* kVersion = "0.1.0";

} // namespace hyperperc
