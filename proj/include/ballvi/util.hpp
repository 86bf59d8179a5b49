#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace ballvi {

// All floating-point output goes through here: 17 significant digits round-trip
// a double exactly, and a fixed format keeps serialized files reproducible.
inline std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

// Integer power with the 0^0 == 1 convention (used for delta^(power-1)).
inline double pow_int(double base, int exp) {
    double r = 1.0;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

inline double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= double(i);
    return r;
}

} // namespace ballvi
