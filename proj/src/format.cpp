#include "pks/format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace pks {

std::string fmt15(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

nlohmann::ordered_json num15(double v) {
    if (!std::isfinite(v)) return nullptr;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return std::strtod(buf, nullptr);
}

}  // namespace pks
