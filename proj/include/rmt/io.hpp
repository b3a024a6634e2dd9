#pragma once

#include <cstdio>
#include <string>

namespace rmt {

/// Round-trip float formatting used for every CSV cell.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace rmt
