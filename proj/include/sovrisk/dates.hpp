#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sovrisk {

// Calendar dates are carried around as day numbers (days since 1970-01-01,
// negative before). Conversions use the civil-calendar algorithms of
// Howard Hinnant, exact over the whole proleptic Gregorian range.

constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) noexcept {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);            // [0, 399]
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;           // [0, 146096]
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
    int year;
    unsigned month;
    unsigned day;
};

constexpr CivilDate civil_from_days(std::int64_t z) noexcept {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);              // [0, 146096]
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;// [0, 399]
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);              // [0, 365]
    const unsigned mp = (5 * doy + 2) / 153;                                   // [0, 11]
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;                           // [1, 31]
    const unsigned m = mp + (mp < 10 ? 3 : -9);                                // [1, 12]
    return {static_cast<int>(y + (m <= 2)), m, d};
}

// Parses strict ISO-8601 "YYYY-MM-DD". Throws std::invalid_argument otherwise.
inline std::int64_t parse_iso_date(const std::string& s) {
    auto fail = [&] { throw std::invalid_argument("bad date '" + s + "', expected YYYY-MM-DD"); };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail();
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') fail();
    const int y = std::stoi(s.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
    if (m < 1 || m > 12 || d < 1 || d > 31) fail();
    const std::int64_t z = days_from_civil(y, m, d);
    const CivilDate back = civil_from_days(z);
    if (back.year != y || back.month != m || back.day != d) fail();  // e.g. Feb 30
    return z;
}

inline std::string format_iso_date(std::int64_t z) {
    const CivilDate c = civil_from_days(z);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

}  // namespace sovrisk
