#pragma once

#include <string_view>

#include "pireg/io.hpp"

namespace pireg {

// Bundled example scenarios. The equilibrium inflow split is computed from
// the outflow at the set-point at runtime, so f(x*) = u* + v* holds bit-exactly.

// Unimodal outflow x exp(-x/10) on a 16.8-capacity network, set-point 10,
// gains (0.9, 1.08), input bounds [0, 3.1]; ships a sector parameter set.
ScenarioFile example_41();

// Outflow x exp(-x^2/10) on a 20-capacity network, set-point 3, gains (1, 1),
// input bounds [0, 3]; globally unstabilizable (a spurious saturated
// equilibrium exists), locally certifiable.
ScenarioFile example_42();

// Lookup by CLI id ("4.1" or "4.2"); throws DomainError for unknown ids.
ScenarioFile builtin_example(std::string_view id);

}  // namespace pireg
