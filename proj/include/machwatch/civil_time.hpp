#ifndef MACHWATCH_CIVIL_TIME_HPP
#define MACHWATCH_CIVIL_TIME_HPP

#include "machwatch/error.hpp"
#include "machwatch/text.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

// UTC epoch-second helpers. Timestamps are always UTC; local time only
// appears in the working calendar, which carries a fixed offset.
namespace machwatch::civil {

using Seconds = std::int64_t;

inline constexpr Seconds kDay = 86400;

inline Seconds floor_div(Seconds a, Seconds b) noexcept {
    Seconds q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline Seconds day_start(Seconds ts) noexcept { return floor_div(ts, kDay) * kDay; }

/// "YYYY-MM-DD" of the UTC day containing ts.
inline std::string day_string(Seconds ts) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{floor_div(ts, kDay)}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

/// Epoch second of UTC midnight for "YYYY-MM-DD".
inline Seconds parse_day(std::string_view s) {
    using namespace std::chrono;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw DataError("bad day '" + std::string(s) + "', expected YYYY-MM-DD");
    const auto y = static_cast<int>(text::parse_int(s.substr(0, 4)));
    const auto m = static_cast<unsigned>(text::parse_int(s.substr(5, 2)));
    const auto d = static_cast<unsigned>(text::parse_int(s.substr(8, 2)));
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw DataError("bad day '" + std::string(s) + "'");
    return sys_days{ymd}.time_since_epoch().count() * kDay;
}

/// Accepts integer epoch seconds, "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SSZ".
inline Seconds parse_time(std::string_view s) {
    s = text::trim(s);
    if (s.size() == 10 && s[4] == '-') return parse_day(s);
    if (s.size() == 20 && s[10] == 'T' && s[19] == 'Z' && s[13] == ':' && s[16] == ':') {
        const Seconds h = text::parse_int(s.substr(11, 2));
        const Seconds mi = text::parse_int(s.substr(14, 2));
        const Seconds se = text::parse_int(s.substr(17, 2));
        if (h > 23 || mi > 59 || se > 59) throw DataError("bad time '" + std::string(s) + "'");
        return parse_day(s.substr(0, 10)) + h * 3600 + mi * 60 + se;
    }
    return text::parse_int(s);
}

/// ISO-8601 UTC rendering, "YYYY-MM-DDTHH:MM:SSZ".
inline std::string iso(Seconds ts) {
    const Seconds sod = ts - day_start(ts);
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%02d:%02d:%02dZ", static_cast<int>(sod / 3600),
                  static_cast<int>(sod / 60 % 60), static_cast<int>(sod % 60));
    return day_string(ts) + buf;
}

/// 0 = Monday ... 6 = Sunday.
inline int weekday_monday0(Seconds ts) noexcept {
    // 1970-01-01 was a Thursday (index 3).
    return static_cast<int>((floor_div(ts, kDay) % 7 + 7 + 3) % 7);
}

}  // namespace machwatch::civil

#endif  // MACHWATCH_CIVIL_TIME_HPP
