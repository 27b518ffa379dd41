#ifndef MACHWATCH_CRITERIA_CALENDAR_HPP
#define MACHWATCH_CRITERIA_CALENDAR_HPP

#include "machwatch/civil_time.hpp"
#include "machwatch/error.hpp"
#include "machwatch/text.hpp"

#include <array>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace machwatch {

using civil::Seconds;

inline constexpr std::array<std::string_view, 7> kWeekdayKeys{"mon", "tue", "wed", "thu", "fri", "sat", "sun"};

/// Weekly working schedule in plant-local time. The zone is a fixed UTC
/// offset ("UTC", "UTC+02:00", "-05:30"); daylight-saving rules are not
/// modelled.
class WorkCalendar {
public:
    struct Span {
        int from_min = 0;  // minutes after local midnight, inclusive
        int to_min = 0;    // exclusive, up to 1440

        friend bool operator==(const Span&, const Span&) = default;
    };

    /// Mon-Fri 06:00-22:00, weekend off, UTC.
    static WorkCalendar standard() {
        WorkCalendar c;
        for (int d = 0; d < 5; ++d) c.days_[d] = {Span{6 * 60, 22 * 60}};
        return c;
    }

    [[nodiscard]] bool in_hours(Seconds ts) const noexcept {
        const Seconds local = ts + offset_s_;
        const int wd = civil::weekday_monday0(local);
        const Seconds sod = local - civil::day_start(local);
        for (const auto& s : days_[wd])
            if (sod >= s.from_min * 60 && sod < s.to_min * 60) return true;
        return false;
    }

    void set_day(int weekday_monday0, std::vector<Span> spans) { days_.at(weekday_monday0) = std::move(spans); }
    [[nodiscard]] const std::vector<Span>& day(int weekday_monday0) const { return days_.at(weekday_monday0); }

    [[nodiscard]] int offset_s() const noexcept { return offset_s_; }
    void set_offset_s(int offset) { offset_s_ = offset; }

    /// "06:00-14:00,15:00-22:00" or "off".
    static std::vector<Span> parse_day(std::string_view v) {
        v = text::trim(v);
        std::vector<Span> out;
        if (v == "off" || v.empty()) return out;
        for (auto part : text::split(v, ',')) {
            part = text::trim(part);
            const auto dash = part.find('-');
            if (dash == std::string_view::npos) throw DataError("bad calendar span '" + std::string(part) + "'");
            Span s{parse_hhmm(part.substr(0, dash)), parse_hhmm(part.substr(dash + 1))};
            if (s.from_min >= s.to_min) throw DataError("calendar span must be increasing: '" + std::string(part) + "'");
            out.push_back(s);
        }
        return out;
    }

    static std::string render_day(const std::vector<Span>& spans) {
        if (spans.empty()) return "off";
        std::vector<std::string> parts;
        for (const auto& s : spans) parts.push_back(hhmm(s.from_min) + "-" + hhmm(s.to_min));
        return text::join(parts, ",");
    }

    static int parse_tz(std::string_view v) {
        v = text::trim(v);
        if (v.rfind("UTC", 0) == 0) v.remove_prefix(3);
        if (v.empty() || v == "Z") return 0;
        if (v.size() != 6 || (v[0] != '+' && v[0] != '-') || v[3] != ':')
            throw DataError("bad timezone '" + std::string(v) + "', expected UTC or UTC+HH:MM");
        const int sign = v[0] == '-' ? -1 : 1;
        const auto h = text::parse_int(v.substr(1, 2));
        const auto m = text::parse_int(v.substr(4, 2));
        if (h > 14 || m > 59) throw DataError("bad timezone offset");
        return sign * static_cast<int>(h * 3600 + m * 60);
    }

    static std::string render_tz(int offset_s) {
        if (offset_s == 0) return "UTC";
        const int a = offset_s < 0 ? -offset_s : offset_s;
        char buf[16];
        std::snprintf(buf, sizeof buf, "UTC%c%02d:%02d", offset_s < 0 ? '-' : '+', a / 3600, a / 60 % 60);
        return buf;
    }

    friend bool operator==(const WorkCalendar&, const WorkCalendar&) = default;

private:
    static int parse_hhmm(std::string_view s) {
        s = text::trim(s);
        if (s.size() != 5 || s[2] != ':') throw DataError("bad time of day '" + std::string(s) + "'");
        const auto h = text::parse_int(s.substr(0, 2));
        const auto m = text::parse_int(s.substr(3, 2));
        if (h > 24 || m > 59 || (h == 24 && m != 0)) throw DataError("bad time of day '" + std::string(s) + "'");
        return static_cast<int>(h * 60 + m);
    }

    static std::string hhmm(int minutes) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
        return buf;
    }

    std::array<std::vector<Span>, 7> days_{};
    int offset_s_ = 0;
};

}  // namespace machwatch

#endif  // MACHWATCH_CRITERIA_CALENDAR_HPP
