#pragma once

#include <string>

namespace arbgeo {

// Formats a double with 9 significant digits, shortest-general form,
// locale-independent ('.' decimal point). Negative zero collapses to "0".
std::string fmt9(double v);

}  // namespace arbgeo
