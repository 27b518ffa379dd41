#ifndef MACHWATCH_CRITERIA_CRITERION_HPP
#define MACHWATCH_CRITERIA_CRITERION_HPP

#include "machwatch/criteria/calendar.hpp"
#include "machwatch/kv_config.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace machwatch {

/// The ten expert alert criteria, in cause/risk matrix row order.
enum class CriterionId : std::uint8_t {
    TempGradient,
    CurrentPeakCount,
    CurrentWithoutVibration,
    VibrationWithoutCurrent_C,
    ExcessVibration,
    VibrationWithoutCurrent_V,
    SpindleRpmRise,
    OutOfHoursUse,
    ZeroDrop,
    CurrentIntensityChange,
};

inline constexpr std::size_t kCriterionCount = 10;

inline constexpr std::array<std::string_view, kCriterionCount> kCriterionTokens{
    "TempGradient",     "CurrentPeakCount",          "CurrentWithoutVibration", "VibrationWithoutCurrent_C",
    "ExcessVibration",  "VibrationWithoutCurrent_V", "SpindleRpmRise",          "OutOfHoursUse",
    "ZeroDrop",         "CurrentIntensityChange"};

inline constexpr std::array<CriterionId, kCriterionCount> kAllCriteria{
    CriterionId::TempGradient,     CriterionId::CurrentPeakCount,          CriterionId::CurrentWithoutVibration,
    CriterionId::VibrationWithoutCurrent_C, CriterionId::ExcessVibration, CriterionId::VibrationWithoutCurrent_V,
    CriterionId::SpindleRpmRise,   CriterionId::OutOfHoursUse,             CriterionId::ZeroDrop,
    CriterionId::CurrentIntensityChange};

inline constexpr std::size_t ordinal(CriterionId id) noexcept { return static_cast<std::size_t>(id); }
inline std::string_view to_string(CriterionId id) { return kCriterionTokens[ordinal(id)]; }

inline CriterionId parse_criterion(std::string_view s) {
    for (std::size_t i = 0; i < kCriterionCount; ++i)
        if (kCriterionTokens[i] == s) return static_cast<CriterionId>(i);
    throw DataError("unknown criterion '" + std::string(s) + "'");
}

/// Every threshold the rule criteria use. Defaults are calibrated against
/// the plant simulator; currents in A, vibration RMS in g, slopes in °C/min,
/// durations in seconds.
struct CriteriaConfig {
    struct {
        double grad_max = 5.0;
        double span_s = 60.0;  // regression sub-span
    } temp_gradient;
    struct {
        double peak_sigma_k = 2.0;
        double peak_count_max = 10.0;
    } current_peak_count;
    struct {
        double i_active_min = 1.0;
        double vib_rms_min = 0.05;
    } current_without_vibration;
    struct VibrationWithoutCurrent {
        double vib_rms_min;
        double i_active_min;
    };
    VibrationWithoutCurrent vibration_without_current_c{0.05, 1.0};
    VibrationWithoutCurrent vibration_without_current_v{0.5, 1.0};
    struct {
        double vib_rms_max = 1.5;
    } excess_vibration;
    struct {
        double rpm_current_quantile = 0.95;
        double rpm_min_duration_s = 60.0;
        double rpm_temp_slope_min = 2.0;
    } spindle_rpm_rise;
    struct {
        double i_active_min = 1.0;
    } out_of_hours_use;
    struct {
        double zero_eps = 0.2;
        double zero_min_duration_s = 30.0;
    } zero_drop;
    struct {
        double step_delta_min = 3.0;
    } current_intensity_change;
    WorkCalendar work_calendar = WorkCalendar::standard();

    /// (key, value) views of every numeric parameter, `Criterion.param`.
    std::vector<std::pair<std::string, double*>> parameters() {
        return {
            {"TempGradient.grad_max", &temp_gradient.grad_max},
            {"TempGradient.span_s", &temp_gradient.span_s},
            {"CurrentPeakCount.peak_sigma_k", &current_peak_count.peak_sigma_k},
            {"CurrentPeakCount.peak_count_max", &current_peak_count.peak_count_max},
            {"CurrentWithoutVibration.i_active_min", &current_without_vibration.i_active_min},
            {"CurrentWithoutVibration.vib_rms_min", &current_without_vibration.vib_rms_min},
            {"VibrationWithoutCurrent_C.vib_rms_min", &vibration_without_current_c.vib_rms_min},
            {"VibrationWithoutCurrent_C.i_active_min", &vibration_without_current_c.i_active_min},
            {"ExcessVibration.vib_rms_max", &excess_vibration.vib_rms_max},
            {"VibrationWithoutCurrent_V.vib_rms_min", &vibration_without_current_v.vib_rms_min},
            {"VibrationWithoutCurrent_V.i_active_min", &vibration_without_current_v.i_active_min},
            {"SpindleRpmRise.rpm_current_quantile", &spindle_rpm_rise.rpm_current_quantile},
            {"SpindleRpmRise.rpm_min_duration_s", &spindle_rpm_rise.rpm_min_duration_s},
            {"SpindleRpmRise.rpm_temp_slope_min", &spindle_rpm_rise.rpm_temp_slope_min},
            {"OutOfHoursUse.i_active_min", &out_of_hours_use.i_active_min},
            {"ZeroDrop.zero_eps", &zero_drop.zero_eps},
            {"ZeroDrop.zero_min_duration_s", &zero_drop.zero_min_duration_s},
            {"CurrentIntensityChange.step_delta_min", &current_intensity_change.step_delta_min},
        };
    }

    std::vector<std::pair<std::string, double>> parameters() const {
        std::vector<std::pair<std::string, double>> out;
        for (auto& [k, p] : const_cast<CriteriaConfig*>(this)->parameters()) out.emplace_back(k, *p);
        return out;
    }

    /// Throws DataError when a threshold is non-positive or out of range.
    void validate() const {
        for (const auto& [k, v] : parameters())
            if (!(v > 0)) throw DataError("criteria parameter " + k + " must be strictly positive");
        if (!(spindle_rpm_rise.rpm_current_quantile < 1.0))
            throw DataError("SpindleRpmRise.rpm_current_quantile must lie in (0, 1)");
    }

    /// Reads `Criterion.param` and `calendar.*` keys, ignoring everything
    /// else so criteria, pipeline and scenario settings can share one file.
    /// A key under a known criterion prefix with an unknown parameter is an
    /// error.
    static CriteriaConfig from_kv(const KvConfig& kv) {
        CriteriaConfig cfg;
        auto params = cfg.parameters();
        for (const auto& [key, value] : kv.entries()) {
            const auto dot = key.find('.');
            if (dot == std::string::npos) continue;
            const auto prefix = std::string_view(key).substr(0, dot);
            if (prefix == "calendar") {
                const auto field = std::string_view(key).substr(dot + 1);
                if (field == "tz") {
                    cfg.work_calendar.set_offset_s(WorkCalendar::parse_tz(value));
                    continue;
                }
                bool matched = false;
                for (std::size_t d = 0; d < 7; ++d)
                    if (field == kWeekdayKeys[d]) {
                        cfg.work_calendar.set_day(static_cast<int>(d), WorkCalendar::parse_day(value));
                        matched = true;
                    }
                if (!matched) throw DataError("unknown calendar key '" + key + "'");
                continue;
            }
            bool known_prefix = false;
            for (auto t : kCriterionTokens) known_prefix |= (t == prefix);
            if (!known_prefix) continue;
            bool found = false;
            for (auto& [name, ptr] : params)
                if (name == key) {
                    *ptr = text::parse_double(value);
                    found = true;
                }
            if (!found) throw DataError("unknown criteria parameter '" + key + "'");
        }
        // A calendar section, when present, must name all seven weekdays.
        bool any_day = false;
        for (auto d : kWeekdayKeys) any_day |= kv.has("calendar." + std::string(d));
        if (any_day)
            for (auto d : kWeekdayKeys)
                if (!kv.has("calendar." + std::string(d)))
                    throw DataError("calendar must cover all 7 weekdays; missing calendar." + std::string(d));
        cfg.validate();
        return cfg;
    }

    [[nodiscard]] KvConfig to_kv() const {
        KvConfig kv;
        for (const auto& [k, v] : parameters()) kv.set(k, text::format_double(v));
        for (std::size_t d = 0; d < 7; ++d)
            kv.set("calendar." + std::string(kWeekdayKeys[d]), WorkCalendar::render_day(work_calendar.day(static_cast<int>(d))));
        kv.set("calendar.tz", WorkCalendar::render_tz(work_calendar.offset_s()));
        return kv;
    }
};

}  // namespace machwatch

#endif  // MACHWATCH_CRITERIA_CRITERION_HPP
