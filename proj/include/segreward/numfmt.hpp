#pragma once

#include <string>

namespace segreward {

// Shortest decimal that round-trips to the same double. Integral values
// come out without a fraction ("10", not "10.0").
std::string format_number(double v);

// Fixed-point with `decimals` digits after the point.
std::string format_fixed(double v, int decimals);

}  // namespace segreward
