#ifndef MACHWATCH_SIM_CATALOG_HPP
#define MACHWATCH_SIM_CATALOG_HPP

#include "machwatch/rng.hpp"
#include "machwatch/sim/scenario.hpp"

#include <cctype>
#include <string>
#include <vector>

namespace machwatch::sim {

inline constexpr int kPlantTzOffset = 2 * 3600;

/// Mon-Fri 06:00-22:00 at UTC+02:00.
inline WorkCalendar plant_calendar() {
    WorkCalendar c = WorkCalendar::standard();
    c.set_offset_s(kPlantTzOffset);
    return c;
}

inline Seconds injection_length(InjectionKind k) {
    switch (k) {
    case InjectionKind::ZeroDrop: return 45;
    case InjectionKind::SpindleSeizure:
    case InjectionKind::CncTamper:
    case InjectionKind::SensorVibGhost: return 300;
    case InjectionKind::OutOfHours:
    case InjectionKind::PlcDos: return 1800;
    default: return 600;
    }
}

inline ProcessContext tool_context(const ToolInfo& t, Access access = Access::Local) {
    return {t.operation, std::string(t.tool), t.material, access};
}

inline ProcessContext idle_context() { return {Operation::Idle, std::string(kNoTool), Material::Other, Access::Local}; }

inline const ToolInfo& tool_info(std::string_view tool) {
    for (const auto& t : kToolCatalog)
        if (t.tool == tool) return t;
    throw NotFound("unknown tool '" + std::string(tool) + "'");
}

/// Fixed single-day template used by the per-kind scenarios. `day` is UTC
/// midnight; the shift runs 04:00-20:00 UTC.
inline std::vector<ScheduleEntry> template_day(Seconds day) {
    struct Row {
        int from_min, to_min;
        const char* tool;  // nullptr for Idle
    };
    static constexpr Row rows[] = {
        {240, 255, nullptr},   {255, 360, "T05"},   {360, 390, nullptr},  {390, 480, "T01"},
        {480, 500, nullptr},   {500, 600, "T08"},   {600, 630, nullptr},  {630, 720, "T10"},
        {720, 735, nullptr},   {735, 840, "T12"},   {840, 870, nullptr},  {870, 1020, "T05"},
        {1020, 1050, nullptr}, {1050, 1185, "T02"}, {1185, 1200, nullptr},
    };
    std::vector<ScheduleEntry> out;
    for (const auto& r : rows)
        out.push_back({{day + r.from_min * 60, day + r.to_min * 60}, r.tool ? tool_context(tool_info(r.tool)) : idle_context()});
    return out;
}

/// Random alternation of machining blocks (45-90 min) and Idle gaps
/// (10-20 min) filling [from, to).
inline std::vector<ScheduleEntry> random_day(Seconds from, Seconds to, CounterRng& rng) {
    std::vector<ScheduleEntry> out;
    Seconds t = from;
    const Seconds warmup = std::min<Seconds>(15 * 60, to - from);
    out.push_back({{t, t + warmup}, idle_context()});
    t += warmup;
    int prev_op = -1;
    while (to - t >= 30 * 60) {
        const ToolInfo* tool = nullptr;
        do tool = &kToolCatalog[rng.index(kToolCatalog.size())];
        while (static_cast<int>(tool->operation) == prev_op);
        prev_op = static_cast<int>(tool->operation);
        Seconds len = static_cast<Seconds>(9 + rng.index(10)) * 300;
        len = std::min(len, to - t - 10 * 60);
        out.push_back({{t, t + len}, tool_context(*tool)});
        t += len;
        Seconds gap = std::min<Seconds>(static_cast<Seconds>(2 + rng.index(3)) * 300, to - t);
        if (to - t - gap < 30 * 60) gap = to - t;
        out.push_back({{t, t + gap}, idle_context()});
        t += gap;
    }
    if (t < to) out.push_back({{t, to}, idle_context()});
    return out;
}

/// First t >= earliest with (t - day) % 900 == 405, so step-like onsets sit
/// mid-window for 30 s, 120 s and 900 s windows alike.
inline Seconds aligned_start(Seconds earliest, Seconds day) {
    Seconds t = day + civil::floor_div(earliest - day, 900) * 900 + 405;
    while (t < earliest) t += 900;
    return t;
}

/// Places `kind` into the first free schedule entry that can host it on the
/// day starting at `day`. Off-schedule kinds go to the night before the
/// shift. Returns false when nothing fits.
inline bool place_injection(ScenarioSpec& s, InjectionKind kind, Seconds day, std::vector<bool>& used_entries, int& night_slot) {
    const Seconds len = injection_length(kind);
    const auto where = placement(kind);
    if (where == Placement::OffSchedule) {
        const Seconds start = day + 3600 + night_slot * 2400;  // 03:00 local onwards
        AnomalyInjection inj{kind, {start, start + len}, {}, tool_context(kToolCatalog[4])};
        if (kind == InjectionKind::PlcDos) inj.ctx.access = Access::Remote;
        for (const auto& e : s.schedule)
            if (e.interval.intersects(inj.interval)) return false;
        ++night_slot;
        s.injections.push_back(std::move(inj));
        return true;
    }
    for (std::size_t i = 0; i < s.schedule.size(); ++i) {
        const auto& e = s.schedule[i];
        if (used_entries[i] || civil::day_start(e.interval.start) != day) continue;
        const bool idle = e.ctx.operation == Operation::Idle;
        if (idle != (where == Placement::Idle)) continue;
        const Seconds start = aligned_start(e.interval.start + (idle ? 60 : 300), day);
        if (start + len + (idle ? 60 : 120) > e.interval.end) continue;
        used_entries[i] = true;
        s.injections.push_back({kind, {start, start + len}, {}, {}});
        return true;
    }
    return false;
}

inline std::string kebab(std::string_view token) {
    std::string out;
    for (std::size_t i = 0; i < token.size(); ++i) {
        const char c = token[i];
        if (std::isupper(static_cast<unsigned char>(c))) {
            const bool boundary = i > 0 && (std::islower(static_cast<unsigned char>(token[i - 1])) ||
                                            (i + 1 < token.size() && std::islower(static_cast<unsigned char>(token[i + 1]))));
            if (boundary) out += '-';
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            out += c;
        }
    }
    return out;
}

inline constexpr Seconds kCatalogDay = 1664755200;    // 2022-10-03, Monday
inline constexpr Seconds kPlantFirstDay = 1659312000;  // 2022-08-01, Monday

/// One working day on the template schedule with a single injection.
inline ScenarioSpec single_kind_scenario(InjectionKind kind, std::uint64_t seed = 1) {
    ScenarioSpec s;
    s.name = kebab(to_string(kind));
    s.seed = seed;
    s.span = {kCatalogDay, kCatalogDay + civil::kDay};
    s.calendar = plant_calendar();
    s.schedule = template_day(kCatalogDay);
    const Seconds len = injection_length(kind);
    Seconds start = 0;
    ProcessContext ctx = tool_context(tool_info("T05"));
    switch (placement(kind)) {
    case Placement::Machining: start = kCatalogDay + 16605; break;  // inside the first T05 block
    case Placement::Idle: start = kCatalogDay + 22005; break;       // inside the 06:00-06:30 UTC gap
    case Placement::OffSchedule:
        if (kind == InjectionKind::PlcDos) {
            start = kCatalogDay + 3600;  // 03:00 local
            ctx.access = Access::Remote;
        } else {
            start = kCatalogDay + 73800;  // 22:30 local
        }
        break;
    }
    s.injections.push_back({kind, {start, start + len}, {}, ctx});
    s.reviewed.push_back({s.schedule.front().interval.start, s.schedule.back().interval.end});
    if (placement(kind) == Placement::OffSchedule) s.reviewed.push_back(s.injections.back().interval);
    return s;
}

struct PlantOptions {
    int working_days = 7;
    int shift_from_min = 6 * 60;  // local
    int shift_to_min = 22 * 60;
    int injections_per_day = 3;
    int review_every = 1;  // every n-th working day is expert-reviewed
    Seconds first_day = kPlantFirstDay;
};

/// Randomised production schedule over Mon-Fri working days with the
/// injection kinds cycled in a fixed order.
inline ScenarioSpec plant_scenario(std::string name, const PlantOptions& o, std::uint64_t seed) {
    ScenarioSpec s;
    s.name = std::move(name);
    s.seed = seed;
    s.calendar = plant_calendar();
    CounterRng rng(seed, 0x5c4ed);
    std::vector<Seconds> days;
    for (Seconds d = o.first_day; static_cast<int>(days.size()) < o.working_days; d += civil::kDay)
        if (civil::weekday_monday0(d) < 5) days.push_back(d);
    s.span = {o.first_day, days.empty() ? o.first_day : days.back() + civil::kDay};
    for (Seconds d : days) {
        auto block = random_day(d + o.shift_from_min * 60 - kPlantTzOffset, d + o.shift_to_min * 60 - kPlantTzOffset, rng);
        s.schedule.insert(s.schedule.end(), block.begin(), block.end());
    }
    std::vector<bool> used(s.schedule.size(), false);
    std::size_t next_kind = static_cast<std::size_t>(seed % kInjectionKindCount);
    for (std::size_t di = 0; di < days.size(); ++di) {
        const Seconds d = days[di];
        int night = 0;
        for (int k = 0; k < o.injections_per_day; ++k) {
            // A kind that does not fit today is retried on the next slot.
            for (std::size_t attempt = 0; attempt < kInjectionKindCount; ++attempt) {
                const auto kind = kAllInjectionKinds[(next_kind + attempt) % kInjectionKindCount];
                if (place_injection(s, kind, d, used, night)) {
                    next_kind = (next_kind + attempt + 1) % kInjectionKindCount;
                    break;
                }
            }
        }
        if (o.review_every > 0 && di % static_cast<std::size_t>(o.review_every) == 0) {
            Seconds from = d + o.shift_from_min * 60 - kPlantTzOffset, to = d + o.shift_to_min * 60 - kPlantTzOffset;
            s.reviewed.push_back({from, to});
            for (const auto& inj : s.injections)
                if (placement(inj.kind) == Placement::OffSchedule && civil::day_start(inj.interval.start) == d)
                    s.reviewed.push_back(inj.interval);
        }
    }
    std::sort(s.injections.begin(), s.injections.end(), [](const auto& a, const auto& b) { return a.interval.start < b.interval.start; });
    std::sort(s.reviewed.begin(), s.reviewed.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    return s;
}

/// Five working days and a weekend with no injections.
inline ScenarioSpec nominal_week(std::uint64_t seed = 1) {
    PlantOptions o;
    o.working_days = 5;
    o.injections_per_day = 0;
    o.first_day = kCatalogDay;
    auto s = plant_scenario("nominal-week", o, seed);
    s.span = {kCatalogDay, kCatalogDay + 7 * civil::kDay};
    return s;
}

inline ScenarioSpec plant_7d(std::uint64_t seed = 1) { return plant_scenario("plant-7d", PlantOptions{}, seed); }

inline ScenarioSpec plant_88d(std::uint64_t seed = 1) {
    PlantOptions o;
    o.working_days = 88;
    o.shift_to_min = 14 * 60;
    o.injections_per_day = 2;
    o.review_every = 4;
    return plant_scenario("plant-88d", o, seed);
}

inline std::vector<std::string> scenario_names() {
    std::vector<std::string> names{"nominal-week"};
    for (auto k : kAllInjectionKinds) names.push_back(kebab(to_string(k)));
    names.push_back("plant-7d");
    names.push_back("plant-88d");
    return names;
}

inline ScenarioSpec make_scenario(std::string_view name, std::uint64_t seed = 1) {
    if (name == "nominal-week") return nominal_week(seed);
    if (name == "plant-7d") return plant_7d(seed);
    if (name == "plant-88d") return plant_88d(seed);
    for (auto k : kAllInjectionKinds)
        if (kebab(to_string(k)) == name) return single_kind_scenario(k, seed);
    throw NotFound("unknown scenario '" + std::string(name) + "'");
}

inline std::vector<ScenarioSpec> default_scenarios(std::uint64_t seed = 1) {
    std::vector<ScenarioSpec> out;
    for (const auto& n : scenario_names()) out.push_back(make_scenario(n, seed));
    return out;
}

}  // namespace machwatch::sim

#endif  // MACHWATCH_SIM_CATALOG_HPP
