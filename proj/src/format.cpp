#include "arbgeo/format.hpp"

#include <charconv>
#include <cmath>

namespace arbgeo {

std::string fmt9(double v) {
    if (v == 0.0) return "0";  // also maps -0.0 to "0"
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
    return std::string(buf, res.ptr);
}

}  // namespace arbgeo
