#pragma once

#include <cstdio>
#include <string>

namespace vipar {

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    if (s == "-0" || s.rfind("-0.", 0) == 0) {
        // avoid "-0.00" for values that round to zero
        bool all_zero = true;
        for (char c : s)
            if (c != '-' && c != '0' && c != '.') all_zero = false;
        if (all_zero) s.erase(0, 1);
    }
    return s;
}

// 17 significant digits, enough to round-trip a double.
inline std::string format_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace vipar
