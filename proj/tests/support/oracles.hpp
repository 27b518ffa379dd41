// Straight-line reference implementations used as test oracles. Written
// independently of the engine: long double accumulation, no shared helpers.
#ifndef MACHWATCH_TESTS_ORACLES_HPP
#define MACHWATCH_TESTS_ORACLES_HPP

#include "machwatch/criteria/criterion.hpp"
#include "machwatch/timeseries/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

namespace oracle {

using machwatch::CriterionId;
using machwatch::SensorSample;
using Ld = long double;

struct Verdict {
    bool fired = false;
    Ld score = 0;
};

inline Ld phase(const SensorSample& s, int p) { return p == 0 ? s.i_r : p == 1 ? s.i_s : s.i_t; }
inline Ld cur(const SensorSample& s) { return (static_cast<Ld>(s.i_r) + s.i_s + s.i_t) / 3; }
// Quantile comparisons use the double-precision definition of current so
// that a sample equal to the quantile compares equal on both sides.
inline double cur_d(const SensorSample& s) { return (s.i_r + s.i_s + s.i_t) / 3.0; }

inline Ld mean_cur(const std::vector<SensorSample>& v) {
    Ld sum = 0;
    for (const auto& s : v) sum += cur(s);
    return sum / static_cast<Ld>(v.size());
}

inline Ld rms(const std::vector<SensorSample>& v) {
    Ld sum = 0;
    for (const auto& s : v)
        sum += static_cast<Ld>(s.acc_x) * s.acc_x + static_cast<Ld>(s.acc_y) * s.acc_y + static_cast<Ld>(s.acc_z) * s.acc_z;
    return std::sqrt(sum / static_cast<Ld>(v.size()));
}

/// Normal-equation slope of temp against ts, in °C/min.
inline Ld slope(const std::vector<SensorSample>& v) {
    const Ld n = static_cast<Ld>(v.size());
    Ld sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& s : v) {
        const Ld x = static_cast<Ld>(s.ts - v.front().ts);
        sx += x;
        sy += s.temp;
        sxx += x * x;
        sxy += x * s.temp;
    }
    return 60 * (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Monday = 0; 1970-01-01 was a Thursday.
inline int weekday(std::int64_t t) {
    std::int64_t d = t / 86400;
    if (t % 86400 < 0) --d;
    return static_cast<int>(((d + 3) % 7 + 7) % 7);
}

inline bool working(const machwatch::WorkCalendar& cal, std::int64_t ts) {
    const std::int64_t local = ts + cal.offset_s();
    std::int64_t sod = local % 86400;
    if (sod < 0) sod += 86400;
    for (const auto& span : cal.day(weekday(local)))
        if (sod >= span.from_min * 60LL && sod < span.to_min * 60LL) return true;
    return false;
}

/// Nearest rank: the k-th smallest value for the least k >= q*n, found by
/// linear scan and selection instead of a full sort.
inline Ld quantile(std::vector<double> values, double q) {
    std::size_t k = 1;
    while (k < values.size() && static_cast<Ld>(k) < static_cast<Ld>(q) * static_cast<Ld>(values.size()) - 1e-9L) ++k;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
    return values[k - 1];
}

/// History oracle: group values keyed by (operation, tool).
struct History {
    std::map<std::pair<int, std::string>, std::vector<double>> groups;
    mutable std::map<std::pair<std::pair<int, std::string>, double>, Ld> cache;
    explicit History(const std::vector<SensorSample>& series) {
        for (const auto& s : series) groups[{static_cast<int>(s.ctx.operation), s.ctx.tool}].push_back(cur_d(s));
    }
};

/// nullopt when the engine should report the criterion as not evaluable.
inline std::optional<Verdict> evaluate(CriterionId id, const std::vector<SensorSample>& v, machwatch::Interval iv,
                                       const machwatch::CriteriaConfig& cfg, const History& hist) {
    using C = CriterionId;
    const bool needs_two = id == C::TempGradient || id == C::SpindleRpmRise || id == C::CurrentIntensityChange;
    if (v.size() < (needs_two ? 2u : 1u)) return std::nullopt;
    auto above = [](Ld m, Ld t) { return Verdict{m > t, m > t ? m / t - 1 : 0}; };

    switch (id) {
    case C::TempGradient: {
        Ld best = 0;
        bool any = false;
        for (const auto& start : v) {
            if (start.ts + static_cast<std::int64_t>(cfg.temp_gradient.span_s) > iv.end) continue;
            std::vector<SensorSample> sub;
            for (const auto& s : v)
                if (s.ts >= start.ts && static_cast<Ld>(s.ts) < static_cast<Ld>(start.ts) + cfg.temp_gradient.span_s) sub.push_back(s);
            if (sub.size() < 2) continue;
            const Ld k = slope(sub);
            if (!any || k > best) best = k;
            any = true;
        }
        if (!any) best = slope(v);
        return above(best, cfg.temp_gradient.grad_max);
    }
    case C::CurrentPeakCount: {
        Ld lim[3];
        for (int p = 0; p < 3; ++p) {
            Ld m = 0, ss = 0;
            for (const auto& s : v) m += phase(s, p);
            m /= static_cast<Ld>(v.size());
            for (const auto& s : v) ss += (phase(s, p) - m) * (phase(s, p) - m);
            lim[p] = m + cfg.current_peak_count.peak_sigma_k * std::sqrt(ss / static_cast<Ld>(v.size()));
        }
        Ld count = 0;
        for (const auto& s : v) {
            bool hit = false;
            for (int p = 0; p < 3; ++p) hit = hit || phase(s, p) > lim[p];
            if (hit) count += 1;
        }
        return above(count, cfg.current_peak_count.peak_count_max);
    }
    case C::CurrentWithoutVibration:
    case C::VibrationWithoutCurrent_C:
    case C::VibrationWithoutCurrent_V:
    case C::ExcessVibration: {
        const Ld c = mean_cur(v), r = rms(v);
        if (id == C::ExcessVibration) return above(r, cfg.excess_vibration.vib_rms_max);
        Ld vib_t, cur_t;
        bool current_high;
        if (id == C::CurrentWithoutVibration) {
            vib_t = cfg.current_without_vibration.vib_rms_min;
            cur_t = cfg.current_without_vibration.i_active_min;
            current_high = true;
        } else {
            const auto& p = id == C::VibrationWithoutCurrent_C ? cfg.vibration_without_current_c : cfg.vibration_without_current_v;
            vib_t = p.vib_rms_min;
            cur_t = p.i_active_min;
            current_high = false;
        }
        const bool fired = current_high ? (c > cur_t && r < vib_t) : (r > vib_t && c < cur_t);
        if (!fired) return Verdict{};
        // Both conditions hold; the score is the tighter of the two margins.
        const Ld low = current_high ? r : c, low_t = current_high ? vib_t : cur_t;
        const Ld high = current_high ? c : r, high_t = current_high ? cur_t : vib_t;
        const Ld a = high / high_t - 1;
        const Ld b = low > 0 ? low_t / low - 1 : INFINITY;
        return Verdict{true, std::min(a, b)};
    }
    case C::SpindleRpmRise: {
        const auto& p = cfg.spindle_rpm_rise;
        std::vector<char> high(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto it = hist.groups.find({static_cast<int>(v[i].ctx.operation), v[i].ctx.tool});
            if (it == hist.groups.end()) return std::nullopt;
            const auto key = std::make_pair(it->first, p.rpm_current_quantile);
            auto q = hist.cache.find(key);
            if (q == hist.cache.end()) q = hist.cache.emplace(key, quantile(it->second, p.rpm_current_quantile)).first;
            high[i] = static_cast<Ld>(cur_d(v[i])) > q->second;
        }
        Ld best = 0;
        for (std::size_t a = 0; a < v.size(); ++a) {
            if (!high[a]) continue;
            if (a > 0 && high[a - 1] && v[a].ts == v[a - 1].ts + 1) continue;  // not a run start
            std::size_t b = a;
            while (b + 1 < v.size() && high[b + 1] && v[b + 1].ts == v[b].ts + 1) ++b;
            const Ld len = static_cast<Ld>(b - a + 1);
            if (len <= p.rpm_min_duration_s || b == a) continue;
            std::vector<SensorSample> run(v.begin() + static_cast<std::ptrdiff_t>(a), v.begin() + static_cast<std::ptrdiff_t>(b + 1));
            const Ld k = slope(run);
            if (k <= p.rpm_temp_slope_min) continue;
            best = std::max(best, std::min(len / p.rpm_min_duration_s - 1, k / p.rpm_temp_slope_min - 1));
        }
        return Verdict{best > 0, best};
    }
    case C::OutOfHoursUse: {
        Ld sum = 0;
        std::size_t n = 0;
        for (const auto& s : v)
            if (!working(cfg.work_calendar, s.ts)) {
                sum += cur(s);
                ++n;
            }
        if (n == 0) return Verdict{};
        return above(sum / static_cast<Ld>(n), cfg.out_of_hours_use.i_active_min);
    }
    case C::ZeroDrop: {
        const auto& p = cfg.zero_drop;
        auto is_zero = [&](const SensorSample& s) {
            return s.ctx.operation != machwatch::Operation::Idle && s.i_r < p.zero_eps && s.i_s < p.zero_eps && s.i_t < p.zero_eps;
        };
        Ld longest = 0;
        for (std::size_t a = 0; a < v.size(); ++a) {
            std::size_t b = a;
            if (!is_zero(v[a])) continue;
            while (b + 1 < v.size() && is_zero(v[b + 1]) && v[b + 1].ts == v[b].ts + 1) ++b;
            longest = std::max(longest, static_cast<Ld>(b - a + 1));
        }
        return above(longest, p.zero_min_duration_s);
    }
    case C::CurrentIntensityChange: {
        for (const auto& s : v)
            if (s.ctx.operation != v.front().ctx.operation) return Verdict{};
        const std::size_t h = v.size() / 2;
        const std::vector<SensorSample> first(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
        const std::vector<SensorSample> second(v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
        const Ld d = std::fabs(mean_cur(second) - mean_cur(first));
        return above(d, cfg.current_intensity_change.step_delta_min);
    }
    }
    return std::nullopt;
}

inline Ld gini(const std::vector<Ld>& counts) {
    Ld total = 0, sq = 0;
    for (auto c : counts) total += c;
    for (auto c : counts) sq += (c / total) * (c / total);
    return 1 - sq;
}

/// Per-window sample counts for stride == duration tiling, by scanning.
inline std::vector<std::size_t> tile_counts(const std::vector<std::int64_t>& ts, machwatch::Interval range, int duration) {
    std::vector<std::size_t> out;
    for (std::int64_t s = range.start; s < range.end; s += duration) {
        const std::int64_t e = std::min<std::int64_t>(s + duration, range.end);
        std::size_t n = 0;
        for (auto t : ts) n += (t >= s && t < e);
        out.push_back(n);
    }
    return out;
}

}  // namespace oracle

#endif  // MACHWATCH_TESTS_ORACLES_HPP
