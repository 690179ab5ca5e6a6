#pragma once

#include <cstdio>
#include <string>

namespace powerwb::detail {

// Fixed-point rendering with a given number of decimals.
inline std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

// Up to ten significant digits, for text rendering.
inline std::string compact(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

}  // namespace powerwb::detail
