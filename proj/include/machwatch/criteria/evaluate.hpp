#ifndef MACHWATCH_CRITERIA_EVALUATE_HPP
#define MACHWATCH_CRITERIA_EVALUATE_HPP

#include "machwatch/criteria/criterion.hpp"
#include "machwatch/criteria/history.hpp"
#include "machwatch/timeseries/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace machwatch {

/// Requested criterion needs more samples than the window holds. Distinct
/// from "did not fire".
class WindowTooSmall : public DataError {
public:
    using DataError::DataError;
};

struct Evidence {
    std::string quantity;
    double measured = 0;
    double threshold = 0;

    friend bool operator==(const Evidence&, const Evidence&) = default;
};

/// Score is the excess over the threshold normalised by the threshold;
/// it is strictly positive for every returned firing.
struct CriterionFiring {
    CriterionId criterion{};
    Interval window;
    double score = 0;
    Evidence evidence;

    friend bool operator==(const CriterionFiring&, const CriterionFiring&) = default;
};

struct SkippedCriterion {
    CriterionId criterion{};
    std::string reason;

    friend bool operator==(const SkippedCriterion&, const SkippedCriterion&) = default;
};

/// At most one firing per criterion, ordered by criterion ordinal.
struct FiringSet {
    std::vector<CriterionFiring> firings;
    std::vector<SkippedCriterion> skipped;

    [[nodiscard]] bool empty() const noexcept { return firings.empty(); }
    [[nodiscard]] bool contains(CriterionId id) const { return find(id) != nullptr; }
    [[nodiscard]] const CriterionFiring* find(CriterionId id) const {
        for (const auto& f : firings)
            if (f.criterion == id) return &f;
        return nullptr;
    }
    [[nodiscard]] std::vector<CriterionId> ids() const {
        std::vector<CriterionId> out;
        for (const auto& f : firings) out.push_back(f.criterion);
        return out;
    }

    friend bool operator==(const FiringSet&, const FiringSet&) = default;
};

namespace criteria_detail {

/// measured/threshold - 1, for "measured above threshold" predicates.
inline double excess(double measured, double threshold) { return measured / threshold - 1.0; }

/// threshold/measured - 1, for "measured below threshold" predicates.
inline double shortfall(double measured, double threshold) {
    return measured > 0 ? threshold / measured - 1.0 : std::numeric_limits<double>::infinity();
}

inline double mean_current(std::span<const SensorSample> s) {
    double sum = 0;
    for (const auto& x : s) sum += x.current();
    return sum / static_cast<double>(s.size());
}

inline double vib_rms(std::span<const SensorSample> s) {
    double sum = 0;
    for (const auto& x : s) sum += x.vib_sq();
    return std::sqrt(sum / static_cast<double>(s.size()));
}

/// Least-squares temperature slope in °C/min. Needs >= 2 samples.
inline double temp_slope_per_min(std::span<const SensorSample> s) {
    const double n = static_cast<double>(s.size());
    const double t0 = static_cast<double>(s.front().ts);
    double mx = 0, my = 0;
    for (const auto& x : s) {
        mx += static_cast<double>(x.ts) - t0;
        my += x.temp;
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (const auto& x : s) {
        const double dx = static_cast<double>(x.ts) - t0 - mx;
        sxy += dx * (x.temp - my);
        sxx += dx * dx;
    }
    return 60.0 * sxy / sxx;
}

/// Largest slope over the regression sub-spans: every span of `span_s`
/// seconds that starts on a sample and ends inside the window. Falls back
/// to the whole window when no such span holds two samples (short windows).
inline double max_temp_slope(std::span<const SensorSample> s, const Interval& iv, double span_s) {
    const std::size_t n = s.size();
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = static_cast<double>(s[i].ts);
        if (ti + span_s > static_cast<double>(iv.end)) break;
        j = std::max(j, i);
        while (j < n && static_cast<double>(s[j].ts) < ti + span_s) ++j;
        if (j - i < 2) continue;
        best = std::max(best, temp_slope_per_min(s.subspan(i, j - i)));
        any = true;
    }
    if (!any) return temp_slope_per_min(s);
    return best;
}

inline void require_samples(std::span<const SensorSample> s, std::size_t n, CriterionId id) {
    if (s.size() < n)
        throw WindowTooSmall(std::string(to_string(id)) + " needs at least " + std::to_string(n) + " samples, window has " +
                             std::to_string(s.size()));
}

inline std::optional<CriterionFiring> fire(CriterionId id, const Window& w, double score, std::string quantity,
                                           double measured, double threshold) {
    if (!(score > 0)) return std::nullopt;
    return CriterionFiring{id, w.interval(), score, Evidence{std::move(quantity), measured, threshold}};
}

}  // namespace criteria_detail

/// Evaluate one criterion on one window. `history` is required only by
/// SpindleRpmRise. Returns the firing when the predicate holds.
inline std::optional<CriterionFiring> evaluate_criterion(CriterionId id, const Window& w, const CriteriaConfig& cfg,
                                                         const QuantileStore* history = nullptr) {
    using namespace criteria_detail;
    const auto s = w.samples();
    switch (id) {
    case CriterionId::TempGradient: {
        require_samples(s, 2, id);
        const double slope = max_temp_slope(s, w.interval(), cfg.temp_gradient.span_s);
        const double thr = cfg.temp_gradient.grad_max;
        if (!(slope > thr)) return std::nullopt;
        return fire(id, w, excess(slope, thr), "temp_slope_c_per_min", slope, thr);
    }
    case CriterionId::CurrentPeakCount: {
        require_samples(s, 1, id);
        const double n = static_cast<double>(s.size());
        double limit[3];
        for (int p = 0; p < 3; ++p) {
            auto phase = [p](const SensorSample& x) { return p == 0 ? x.i_r : p == 1 ? x.i_s : x.i_t; };
            double mean = 0;
            for (const auto& x : s) mean += phase(x);
            mean /= n;
            double var = 0;
            for (const auto& x : s) var += (phase(x) - mean) * (phase(x) - mean);
            limit[p] = mean + cfg.current_peak_count.peak_sigma_k * std::sqrt(var / n);
        }
        double count = 0;
        for (const auto& x : s)
            if (x.i_r > limit[0] || x.i_s > limit[1] || x.i_t > limit[2]) count += 1;
        const double thr = cfg.current_peak_count.peak_count_max;
        if (!(count > thr)) return std::nullopt;
        return fire(id, w, excess(count, thr), "current_peak_count", count, thr);
    }
    case CriterionId::CurrentWithoutVibration: {
        require_samples(s, 1, id);
        const auto& c = cfg.current_without_vibration;
        const double cur = mean_current(s);
        const double vib = vib_rms(s);
        if (!(cur > c.i_active_min && vib < c.vib_rms_min)) return std::nullopt;
        const double a = excess(cur, c.i_active_min);
        const double b = shortfall(vib, c.vib_rms_min);
        return a <= b ? fire(id, w, a, "mean_current_a", cur, c.i_active_min)
                      : fire(id, w, b, "vib_rms_g", vib, c.vib_rms_min);
    }
    case CriterionId::VibrationWithoutCurrent_C:
    case CriterionId::VibrationWithoutCurrent_V: {
        require_samples(s, 1, id);
        const auto& c = id == CriterionId::VibrationWithoutCurrent_C ? cfg.vibration_without_current_c
                                                                    : cfg.vibration_without_current_v;
        const double cur = mean_current(s);
        const double vib = vib_rms(s);
        if (!(vib > c.vib_rms_min && cur < c.i_active_min)) return std::nullopt;
        const double a = excess(vib, c.vib_rms_min);
        const double b = shortfall(cur, c.i_active_min);
        return a <= b ? fire(id, w, a, "vib_rms_g", vib, c.vib_rms_min)
                      : fire(id, w, b, "mean_current_a", cur, c.i_active_min);
    }
    case CriterionId::ExcessVibration: {
        require_samples(s, 1, id);
        const double vib = vib_rms(s);
        const double thr = cfg.excess_vibration.vib_rms_max;
        if (!(vib > thr)) return std::nullopt;
        return fire(id, w, excess(vib, thr), "vib_rms_g", vib, thr);
    }
    case CriterionId::SpindleRpmRise: {
        require_samples(s, 2, id);
        if (history == nullptr) throw DataError("SpindleRpmRise requires a quantile history");
        const auto& c = cfg.spindle_rpm_rise;
        std::vector<double> limit(s.size());
        {
            const ProcessContext* cached = nullptr;
            double cached_q = 0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (!cached || cached->operation != s[i].ctx.operation || cached->tool != s[i].ctx.tool) {
                    cached = &s[i].ctx;
                    cached_q = history->quantile(cached->operation, cached->tool, c.rpm_current_quantile);
                }
                limit[i] = cached_q;
            }
        }
        double best = 0;
        double best_len = 0, best_slope = 0;
        std::size_t i = 0;
        while (i < s.size()) {
            if (!(s[i].current() > limit[i])) {
                ++i;
                continue;
            }
            std::size_t j = i + 1;
            while (j < s.size() && s[j].ts == s[j - 1].ts + 1 && s[j].current() > limit[j]) ++j;
            const double len = static_cast<double>(j - i);
            if (len > c.rpm_min_duration_s && j - i >= 2) {
                const double slope = temp_slope_per_min(s.subspan(i, j - i));
                if (slope > c.rpm_temp_slope_min) {
                    const double score = std::min(excess(len, c.rpm_min_duration_s), excess(slope, c.rpm_temp_slope_min));
                    if (score > best) {
                        best = score;
                        best_len = len;
                        best_slope = slope;
                    }
                }
            }
            i = j;
        }
        if (!(best > 0)) return std::nullopt;
        const bool duration_binds = excess(best_len, c.rpm_min_duration_s) <= excess(best_slope, c.rpm_temp_slope_min);
        return duration_binds ? fire(id, w, best, "high_current_run_s", best_len, c.rpm_min_duration_s)
                              : fire(id, w, best, "temp_slope_c_per_min", best_slope, c.rpm_temp_slope_min);
    }
    case CriterionId::OutOfHoursUse: {
        require_samples(s, 1, id);
        double sum = 0;
        std::size_t outside = 0;
        for (const auto& x : s)
            if (!cfg.work_calendar.in_hours(x.ts)) {
                sum += x.current();
                ++outside;
            }
        if (outside == 0) return std::nullopt;
        const double cur = sum / static_cast<double>(outside);
        const double thr = cfg.out_of_hours_use.i_active_min;
        if (!(cur > thr)) return std::nullopt;
        return fire(id, w, excess(cur, thr), "off_hours_mean_current_a", cur, thr);
    }
    case CriterionId::ZeroDrop: {
        require_samples(s, 1, id);
        const auto& c = cfg.zero_drop;
        std::size_t longest = 0, run = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto& x = s[i];
            const bool zero = x.ctx.operation != Operation::Idle && x.i_r < c.zero_eps && x.i_s < c.zero_eps && x.i_t < c.zero_eps;
            if (!zero) {
                run = 0;
                continue;
            }
            run = (run > 0 && x.ts == s[i - 1].ts + 1) ? run + 1 : 1;
            longest = std::max(longest, run);
        }
        const double len = static_cast<double>(longest);
        if (!(len > c.zero_min_duration_s)) return std::nullopt;
        return fire(id, w, excess(len, c.zero_min_duration_s), "zero_run_s", len, c.zero_min_duration_s);
    }
    case CriterionId::CurrentIntensityChange: {
        require_samples(s, 2, id);
        for (const auto& x : s)
            if (x.ctx.operation != s.front().ctx.operation) return std::nullopt;
        const std::size_t half = s.size() / 2;
        const double delta = std::abs(mean_current(s.subspan(half)) - mean_current(s.first(half)));
        const double thr = cfg.current_intensity_change.step_delta_min;
        if (!(delta > thr)) return std::nullopt;
        return fire(id, w, excess(delta, thr), "half_mean_current_delta_a", delta, thr);
    }
    }
    throw DataError("unknown criterion");
}

/// All ten criteria on one window. A criterion that cannot be evaluated
/// (window too small, missing history group) becomes a skip marker.
inline FiringSet evaluate_all(const Window& w, const CriteriaConfig& cfg, const QuantileStore& history) {
    FiringSet out;
    for (auto id : kAllCriteria) {
        try {
            if (auto f = evaluate_criterion(id, w, cfg, &history)) out.firings.push_back(std::move(*f));
        } catch (const DataError& e) {
            out.skipped.push_back({id, e.what()});
        }
    }
    return out;
}

}  // namespace machwatch

#endif  // MACHWATCH_CRITERIA_EVALUATE_HPP
