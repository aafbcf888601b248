#pragma once

#include <cstdio>
#include <string>

namespace qsd {

/// 17 significant digits: doubles survive a text round trip unchanged.
inline std::string format_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace qsd
