#ifndef MACHWATCH_SIM_SCENARIO_HPP
#define MACHWATCH_SIM_SCENARIO_HPP

#include "machwatch/criteria/criterion.hpp"
#include "machwatch/kv_config.hpp"
#include "machwatch/risk/matrix.hpp"
#include "machwatch/timeseries/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace machwatch::sim {

enum class InjectionKind : std::uint8_t {
    SpindleSeizure,
    CurrentPeaks,
    NoVibCurrent,
    SensorVibGhost,
    ExcessVib,
    RpmRise,
    OutOfHours,
    ZeroDrop,
    StepChange,
    CncTamper,
    PlcDos,
};

inline constexpr std::size_t kInjectionKindCount = 11;

inline constexpr std::array<std::string_view, kInjectionKindCount> kInjectionTokens{
    "SpindleSeizure", "CurrentPeaks", "NoVibCurrent", "SensorVibGhost", "ExcessVib", "RpmRise",
    "OutOfHours",     "ZeroDrop",     "StepChange",   "CncTamper",      "PlcDos"};

inline constexpr std::array<InjectionKind, kInjectionKindCount> kAllInjectionKinds{
    InjectionKind::SpindleSeizure, InjectionKind::CurrentPeaks, InjectionKind::NoVibCurrent, InjectionKind::SensorVibGhost,
    InjectionKind::ExcessVib,      InjectionKind::RpmRise,      InjectionKind::OutOfHours,   InjectionKind::ZeroDrop,
    InjectionKind::StepChange,     InjectionKind::CncTamper,    InjectionKind::PlcDos};

inline std::string_view to_string(InjectionKind k) { return kInjectionTokens[static_cast<std::size_t>(k)]; }
inline InjectionKind parse_injection_kind(std::string_view s) {
    for (std::size_t i = 0; i < kInjectionKindCount; ++i)
        if (kInjectionTokens[i] == s) return static_cast<InjectionKind>(i);
    throw DataError("unknown injection kind '" + std::string(s) + "'");
}

/// Where an injection may be placed.
enum class Placement : std::uint8_t { Machining, Idle, OffSchedule };

inline Placement placement(InjectionKind k) {
    switch (k) {
    case InjectionKind::SensorVibGhost: return Placement::Idle;
    case InjectionKind::OutOfHours:
    case InjectionKind::PlcDos: return Placement::OffSchedule;
    default: return Placement::Machining;
    }
}

/// Criteria the signature is built to trigger.
inline std::vector<CriterionId> expected_criteria(InjectionKind k) {
    using C = CriterionId;
    switch (k) {
    case InjectionKind::SpindleSeizure: return {C::SpindleRpmRise, C::ZeroDrop};
    case InjectionKind::CurrentPeaks: return {C::CurrentPeakCount};
    case InjectionKind::NoVibCurrent: return {C::CurrentWithoutVibration};
    case InjectionKind::SensorVibGhost: return {C::VibrationWithoutCurrent_C};
    case InjectionKind::ExcessVib: return {C::ExcessVibration};
    case InjectionKind::RpmRise: return {C::TempGradient, C::SpindleRpmRise};
    case InjectionKind::OutOfHours: return {C::OutOfHoursUse};
    case InjectionKind::ZeroDrop: return {C::ZeroDrop};
    case InjectionKind::StepChange: return {C::CurrentIntensityChange};
    case InjectionKind::CncTamper: return {C::ZeroDrop, C::CurrentIntensityChange};
    case InjectionKind::PlcDos: return {C::OutOfHoursUse};
    }
    return {};
}

/// The true cause behind each injected scenario.
inline std::vector<RiskId> expected_risks(InjectionKind k) {
    switch (k) {
    case InjectionKind::SpindleSeizure:
    case InjectionKind::RpmRise: return {RiskId::SpindleMotorSeizure};
    case InjectionKind::CurrentPeaks: return {RiskId::ClampBreakage};
    case InjectionKind::NoVibCurrent:
    case InjectionKind::StepChange: return {RiskId::WiringComponentFault};
    case InjectionKind::SensorVibGhost: return {RiskId::SensorFault};
    case InjectionKind::ExcessVib: return {RiskId::SymmetricPartDefect};
    case InjectionKind::ZeroDrop: return {RiskId::CncProgramFault};
    case InjectionKind::CncTamper: return {RiskId::CyberCncTampering};
    case InjectionKind::OutOfHours:
    case InjectionKind::PlcDos: return {RiskId::CyberPlcDos};
    }
    return {};
}

/// Default magnitude parameters per kind. Every parameter an injection may
/// carry is listed here; unknown parameter names are rejected.
inline std::map<std::string, double> default_params(InjectionKind k) {
    switch (k) {
    case InjectionKind::SpindleSeizure: return {{"current_factor", 1.6}, {"temp_ramp_c_per_min", 4.0}, {"stop_s", 60.0}};
    case InjectionKind::CurrentPeaks: return {{"spike_a", 12.0}, {"period_s", 2.0}};
    case InjectionKind::NoVibCurrent: return {{"vib_rms_g", 0.01}};
    case InjectionKind::SensorVibGhost: return {{"vib_rms_g", 0.3}};
    case InjectionKind::ExcessVib: return {{"vib_rms_g", 2.5}};
    case InjectionKind::RpmRise: return {{"current_factor", 1.5}, {"temp_ramp_c_per_min", 7.0}};
    case InjectionKind::OutOfHours:
    case InjectionKind::PlcDos:
    case InjectionKind::ZeroDrop: return {};
    case InjectionKind::StepChange: return {{"delta_a", 6.0}};
    case InjectionKind::CncTamper: return {{"delta_a", 5.0}, {"zero_s", 45.0}};
    }
    return {};
}

struct AnomalyInjection {
    InjectionKind kind{};
    Interval interval;
    std::map<std::string, double> params;  // overrides of default_params(kind)
    /// Context of off-schedule kinds (OutOfHours, PlcDos); ignored otherwise.
    ProcessContext ctx{Operation::Milling, "T05", Material::Steel, Access::Local};

    [[nodiscard]] double param(const std::string& name) const {
        if (auto it = params.find(name); it != params.end()) return it->second;
        const auto d = default_params(kind);
        if (auto it = d.find(name); it != d.end()) return it->second;
        throw DataError("injection " + std::string(to_string(kind)) + " has no parameter '" + name + "'");
    }
};

struct ScheduleEntry {
    Interval interval;
    ProcessContext ctx;
};

struct Baseline {
    double i_mean = 0;    // A, mean phase current
    double i_std = 0;     // A, per-phase noise
    double temp_base = 0; // °C, steady-state head temperature
    double vib_rms = 0;   // g

    friend bool operator==(const Baseline&, const Baseline&) = default;
};

inline Baseline default_baseline(Operation op, Material mat) {
    if (op == Operation::Idle) return {0.4, 0.05, 26.0, 0.01};
    double i = 0, vib = 0;
    switch (op) {
    case Operation::Drilling: i = 9; vib = 0.35; break;
    case Operation::Facing: i = 12; vib = 0.4; break;
    case Operation::Milling: i = 14; vib = 0.5; break;
    case Operation::Contouring: i = 11; vib = 0.3; break;
    case Operation::Special: i = 10; vib = 0.3; break;
    case Operation::Idle: break;
    }
    double f = 1.0;
    switch (mat) {
    case Material::Steel: f = 1.0; break;
    case Material::Aluminium: f = 0.7; break;
    case Material::Plastic: f = 0.5; break;
    case Material::StainlessSteel: f = 1.2; break;
    case Material::Other: f = 0.9; break;
    }
    i *= f;
    return {i, 0.3, 30.0 + 1.2 * i, vib};
}

/// Tool catalog: each tool always cuts the same material, so per-(operation,
/// tool) history groups share one baseline.
struct ToolInfo {
    std::string_view tool;
    Operation operation;
    Material material;
};

inline constexpr std::array<ToolInfo, 12> kToolCatalog{{
    {"T01", Operation::Drilling, Material::Aluminium},
    {"T02", Operation::Drilling, Material::Steel},
    {"T03", Operation::Facing, Material::Steel},
    {"T04", Operation::Facing, Material::Plastic},
    {"T05", Operation::Milling, Material::Steel},
    {"T06", Operation::Milling, Material::Aluminium},
    {"T07", Operation::Milling, Material::StainlessSteel},
    {"T08", Operation::Facing, Material::StainlessSteel},
    {"T09", Operation::Contouring, Material::Steel},
    {"T10", Operation::Contouring, Material::Plastic},
    {"T11", Operation::Special, Material::Aluminium},
    {"T12", Operation::Special, Material::Other},
}};

struct ScenarioSpec {
    std::string name;
    std::uint64_t seed = 1;
    Interval span;
    WorkCalendar calendar = WorkCalendar::standard();
    std::vector<ScheduleEntry> schedule;
    std::map<std::pair<Operation, Material>, Baseline> baselines;  // overrides of default_baseline
    std::vector<AnomalyInjection> injections;
    /// Intervals an expert has reviewed; exported as annotations.
    std::vector<Interval> reviewed;

    [[nodiscard]] Baseline baseline(Operation op, Material mat) const {
        if (auto it = baselines.find({op, mat}); it != baselines.end()) return it->second;
        return default_baseline(op, mat);
    }

    /// Throws DataError describing the first broken invariant.
    void validate() const {
        if (span.end < span.start) throw DataError("scenario span is inverted");
        auto sorted = schedule;
        std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.interval.start < b.interval.start; });
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const auto& e = sorted[i];
            if (e.interval.empty()) throw DataError("empty schedule entry");
            if (!e.interval.within(span)) throw DataError("schedule entry outside scenario span");
            machwatch::validate(e.ctx);
            if (i > 0 && sorted[i - 1].interval.end > e.interval.start) throw DataError("schedule entries overlap");
        }
        for (const auto& inj : injections) {
            const auto where = std::string(to_string(inj.kind)) + " injection at " + std::to_string(inj.interval.start);
            if (inj.interval.empty()) throw DataError(where + " has an empty interval");
            if (!inj.interval.within(span)) throw DataError(where + " lies outside the span");
            const auto defaults = default_params(inj.kind);
            for (const auto& [k, v] : inj.params) {
                if (!defaults.contains(k)) throw DataError(where + ": unknown parameter '" + k + "'");
                if (!(v > 0)) throw DataError(where + ": parameter '" + k + "' must be positive");
            }
            const auto p = placement(inj.kind);
            if (p == Placement::OffSchedule) {
                machwatch::validate(inj.ctx);
                if (inj.ctx.operation == Operation::Idle) throw DataError(where + " needs an active operation");
                for (const auto& e : schedule)
                    if (e.interval.intersects(inj.interval)) throw DataError(where + " must lie outside the schedule");
                continue;
            }
            const auto host = std::find_if(schedule.begin(), schedule.end(),
                                           [&](const ScheduleEntry& e) { return inj.interval.within(e.interval); });
            if (host == schedule.end()) throw DataError(where + " must lie within a single schedule entry");
            const bool idle = host->ctx.operation == Operation::Idle;
            if (p == Placement::Idle && !idle) throw DataError(where + " must lie within an Idle entry");
            if (p == Placement::Machining && idle) throw DataError(where + " must lie within a machining entry");
        }
        for (std::size_t i = 0; i < injections.size(); ++i)
            for (std::size_t j = i + 1; j < injections.size(); ++j)
                if (injections[i].interval.intersects(injections[j].interval)) throw DataError("injections overlap");
    }

    // ---- flat key-value form ------------------------------------------------

    [[nodiscard]] KvConfig to_kv() const {
        KvConfig kv;
        kv.set("name", name);
        kv.set("seed", std::to_string(seed));
        kv.set("span.start", std::to_string(span.start));
        kv.set("span.end", std::to_string(span.end));
        for (std::size_t d = 0; d < 7; ++d)
            kv.set("calendar." + std::string(kWeekdayKeys[d]), WorkCalendar::render_day(calendar.day(static_cast<int>(d))));
        kv.set("calendar.tz", WorkCalendar::render_tz(calendar.offset_s()));
        for (std::size_t i = 0; i < schedule.size(); ++i) {
            const auto p = "schedule." + std::to_string(i) + ".";
            put_ctx(kv, p, schedule[i].ctx);
            kv.set(p + "start", std::to_string(schedule[i].interval.start));
            kv.set(p + "end", std::to_string(schedule[i].interval.end));
        }
        for (const auto& [key, b] : baselines) {
            const auto p = "baseline." + std::string(machwatch::to_string(key.first)) + "." + std::string(machwatch::to_string(key.second)) + ".";
            kv.set(p + "i_mean", text::format_double(b.i_mean));
            kv.set(p + "i_std", text::format_double(b.i_std));
            kv.set(p + "temp_base", text::format_double(b.temp_base));
            kv.set(p + "vib_rms", text::format_double(b.vib_rms));
        }
        for (std::size_t i = 0; i < injections.size(); ++i) {
            const auto& inj = injections[i];
            const auto p = "inject." + std::to_string(i) + ".";
            kv.set(p + "kind", std::string(to_string(inj.kind)));
            kv.set(p + "start", std::to_string(inj.interval.start));
            kv.set(p + "end", std::to_string(inj.interval.end));
            for (const auto& [k, v] : inj.params) kv.set(p + k, text::format_double(v));
            if (placement(inj.kind) == Placement::OffSchedule) put_ctx(kv, p, inj.ctx);
        }
        for (std::size_t i = 0; i < reviewed.size(); ++i) {
            kv.set("review." + std::to_string(i) + ".start", std::to_string(reviewed[i].start));
            kv.set("review." + std::to_string(i) + ".end", std::to_string(reviewed[i].end));
        }
        return kv;
    }

    /// Parses the flat form. Times accept epoch seconds or ISO-8601 UTC.
    static ScenarioSpec from_kv(const KvConfig& kv) {
        ScenarioSpec s;
        s.name = kv.get("name").value_or("custom");
        s.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
        s.span = {civil::parse_time(kv.require("span.start")), civil::parse_time(kv.require("span.end"))};
        s.calendar = CriteriaConfig::from_kv(kv).work_calendar;

        std::map<int, std::map<std::string, std::string>> sched, inj, rev;
        for (const auto& [key, value] : kv.entries()) {
            auto grab = [&](std::string_view prefix, std::map<int, std::map<std::string, std::string>>& into) {
                if (key.rfind(prefix, 0) != 0) return false;
                const auto rest = std::string_view(key).substr(prefix.size());
                const auto dot = rest.find('.');
                if (dot == std::string_view::npos) throw DataError("bad scenario key '" + key + "'");
                into[static_cast<int>(text::parse_int(rest.substr(0, dot)))][std::string(rest.substr(dot + 1))] = value;
                return true;
            };
            if (grab("schedule.", sched) || grab("inject.", inj) || grab("review.", rev)) continue;
            if (key.rfind("baseline.", 0) == 0) {
                const auto parts = text::split(std::string_view(key).substr(9), '.');
                if (parts.size() != 3) throw DataError("bad baseline key '" + key + "'");
                const auto k = std::make_pair(parse_operation(parts[0]), parse_material(parts[1]));
                auto [it, fresh] = s.baselines.try_emplace(k, default_baseline(k.first, k.second));
                auto& b = it->second;
                const double v = text::parse_double(value);
                if (parts[2] == "i_mean") b.i_mean = v;
                else if (parts[2] == "i_std") b.i_std = v;
                else if (parts[2] == "temp_base") b.temp_base = v;
                else if (parts[2] == "vib_rms") b.vib_rms = v;
                else throw DataError("unknown baseline field '" + std::string(parts[2]) + "'");
            }
        }
        for (auto& [i, f] : sched) {
            ScheduleEntry e;
            e.interval = {civil::parse_time(at(f, "start", key_of("schedule", i))), civil::parse_time(at(f, "end", key_of("schedule", i)))};
            e.ctx = get_ctx(f, "schedule", i);
            s.schedule.push_back(std::move(e));
        }
        for (auto& [i, f] : inj) {
            AnomalyInjection a;
            a.kind = parse_injection_kind(at(f, "kind", key_of("inject", i)));
            a.interval = {civil::parse_time(at(f, "start", key_of("inject", i))), civil::parse_time(at(f, "end", key_of("inject", i)))};
            if (placement(a.kind) == Placement::OffSchedule) a.ctx = get_ctx(f, "inject", i);
            for (const auto& [k, v] : f) {
                if (k == "kind" || k == "start" || k == "end" || k == "operation" || k == "tool" || k == "material" || k == "access")
                    continue;
                a.params[k] = text::parse_double(v);
            }
            s.injections.push_back(std::move(a));
        }
        for (auto& [i, f] : rev)
            s.reviewed.push_back({civil::parse_time(at(f, "start", key_of("review", i))), civil::parse_time(at(f, "end", key_of("review", i)))});
        s.validate();
        return s;
    }

private:
    static std::string key_of(std::string_view group, int i) { return std::string(group) + "." + std::to_string(i); }

    static const std::string& at(const std::map<std::string, std::string>& f, const std::string& field, const std::string& where) {
        auto it = f.find(field);
        if (it == f.end()) throw DataError("scenario entry " + where + " lacks '" + field + "'");
        return it->second;
    }

    static void put_ctx(KvConfig& kv, const std::string& p, const ProcessContext& c) {
        kv.set(p + "operation", std::string(machwatch::to_string(c.operation)));
        kv.set(p + "tool", c.tool);
        kv.set(p + "material", std::string(machwatch::to_string(c.material)));
        kv.set(p + "access", std::string(machwatch::to_string(c.access)));
    }

    static ProcessContext get_ctx(const std::map<std::string, std::string>& f, std::string_view group, int i) {
        const auto where = key_of(group, i);
        ProcessContext c;
        c.operation = parse_operation(at(f, "operation", where));
        c.tool = at(f, "tool", where);
        c.material = parse_material(at(f, "material", where));
        c.access = f.contains("access") ? parse_access(f.at("access")) : Access::Local;
        return c;
    }
};

}  // namespace machwatch::sim

#endif  // MACHWATCH_SIM_SCENARIO_HPP
