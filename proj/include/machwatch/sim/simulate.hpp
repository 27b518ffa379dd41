#ifndef MACHWATCH_SIM_SIMULATE_HPP
#define MACHWATCH_SIM_SIMULATE_HPP

#include "machwatch/rng.hpp"
#include "machwatch/sim/scenario.hpp"
#include "machwatch/timeseries/csv.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace machwatch::sim {

struct GroundTruth {
    Interval interval;
    InjectionKind kind{};
    std::vector<CriterionId> criteria;
    std::vector<RiskId> risks;
};

struct SimulationResult {
    SampleBuffer samples;  // strictly increasing ts
    std::vector<GroundTruth> truth;
    std::vector<Annotation> annotations;
    WorkCalendar calendar = WorkCalendar::standard();
};

namespace sim_detail {

inline constexpr double kAmbient = 22.0;
inline constexpr double kTau = 600.0;       // s, heating lag
inline constexpr double kCoolTau = 1800.0;  // s, cooling while switched off
inline constexpr double kTempNoise = 0.05;
inline constexpr double kPhaseImbalance[3] = {0.02, 0.0, -0.02};

enum Channel : std::uint64_t { Temp = 1, PhaseR, PhaseS, PhaseT, AccX, AccY, AccZ };

inline double gauss(std::uint64_t seed, Channel ch, Seconds ts) {
    const auto k = static_cast<std::uint64_t>(ts) * 2;
    CounterRng r(seed, ch);
    const double u1 = (static_cast<double>(r.at(k) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(r.at(k + 1) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline double round_to(double v, double scale) { return std::round(v * scale) / scale; }

struct Segment {
    Interval interval;
    ProcessContext ctx;
};

}  // namespace sim_detail

/// Deterministic 1 Hz generation: the same scenario and seed give byte-identical
/// output. Every noise draw is keyed by (seed, channel, ts).
inline SimulationResult simulate(const ScenarioSpec& spec) {
    using namespace sim_detail;
    spec.validate();

    std::vector<Segment> segments;
    for (const auto& e : spec.schedule) segments.push_back({e.interval, e.ctx});
    for (const auto& inj : spec.injections)
        if (placement(inj.kind) == Placement::OffSchedule) segments.push_back({inj.interval, inj.ctx});
    std::sort(segments.begin(), segments.end(), [](const auto& a, const auto& b) { return a.interval.start < b.interval.start; });

    auto injections = spec.injections;
    std::sort(injections.begin(), injections.end(), [](const auto& a, const auto& b) { return a.interval.start < b.interval.start; });

    SimulationResult out;
    out.calendar = spec.calendar;
    std::size_t total = 0;
    for (const auto& s : segments) total += static_cast<std::size_t>(s.interval.length());
    out.samples.reserve(total);

    double temp = kAmbient;
    double heat = 0.0;  // injected excess, decays once the injection ends
    Seconds last = spec.span.start;
    std::size_t next_inj = 0;
    for (const auto& seg : segments) {
        if (seg.interval.start > last)
        {
            const double decay = std::exp(-static_cast<double>(seg.interval.start - last) / kCoolTau);
            temp = kAmbient + (temp - kAmbient) * decay;
            heat *= decay;
        }
        const Baseline b = spec.baseline(seg.ctx.operation, seg.ctx.material);
        for (Seconds t = seg.interval.start; t < seg.interval.end; ++t) {
            while (next_inj < injections.size() && injections[next_inj].interval.end <= t) ++next_inj;
            const AnomalyInjection* inj =
                next_inj < injections.size() && injections[next_inj].interval.contains(t) ? &injections[next_inj] : nullptr;

            double factor = 1.0, add = 0.0, vib = b.vib_rms, ramp = 0.0;
            double spike[3] = {0, 0, 0};
            bool zero = false;
            ProcessContext ctx = seg.ctx;
            if (inj) {
                const Seconds k = t - inj->interval.start;
                const Seconds left = inj->interval.end - t;
                switch (inj->kind) {
                case InjectionKind::SpindleSeizure:
                    if (left <= static_cast<Seconds>(inj->param("stop_s"))) zero = true;
                    else {
                        factor = inj->param("current_factor");
                        ramp = inj->param("temp_ramp_c_per_min") / 60.0;
                    }
                    break;
                case InjectionKind::CurrentPeaks: {
                    const auto period = std::max<Seconds>(1, static_cast<Seconds>(inj->param("period_s")));
                    if (k % period == 0) spike[(k / period) % 3] = inj->param("spike_a");
                    break;
                }
                case InjectionKind::NoVibCurrent:
                case InjectionKind::SensorVibGhost:
                case InjectionKind::ExcessVib: vib = inj->param("vib_rms_g"); break;
                case InjectionKind::RpmRise:
                    factor = inj->param("current_factor");
                    ramp = inj->param("temp_ramp_c_per_min") / 60.0;
                    break;
                case InjectionKind::OutOfHours:
                case InjectionKind::PlcDos: break;
                case InjectionKind::ZeroDrop: zero = true; break;
                case InjectionKind::StepChange: add = inj->param("delta_a"); break;
                case InjectionKind::CncTamper:
                    ctx.access = Access::Remote;
                    if (left <= static_cast<Seconds>(inj->param("zero_s"))) zero = true;
                    else add = inj->param("delta_a");
                    break;
                }
            }

            temp += (b.temp_base - temp) / kTau;
            heat = ramp > 0 ? heat + ramp : heat - heat / kTau;
            SensorSample s;
            s.ts = t;
            s.ctx = ctx;
            s.temp = round_to(temp + heat + kTempNoise * gauss(spec.seed, Temp, t), 100);
            const Channel phase_ch[3] = {PhaseR, PhaseS, PhaseT};
            double* phases[3] = {&s.i_r, &s.i_s, &s.i_t};
            for (int p = 0; p < 3; ++p) {
                const double g = gauss(spec.seed, phase_ch[p], t);
                const double v = zero ? std::abs(g) * 0.02
                                      : b.i_mean * factor * (1.0 + kPhaseImbalance[p]) + add + spike[p] + b.i_std * g;
                *phases[p] = round_to(std::max(0.0, v), 1000);
            }
            const double axis = zero ? 0.002 : vib / std::sqrt(3.0);
            s.acc_x = round_to(axis * gauss(spec.seed, AccX, t), 10000);
            s.acc_y = round_to(axis * gauss(spec.seed, AccY, t), 10000);
            s.acc_z = round_to(axis * gauss(spec.seed, AccZ, t), 10000);
            out.samples.push_back(std::move(s));
        }
        last = seg.interval.end;
    }

    for (const auto& inj : injections)
        out.truth.push_back({inj.interval, inj.kind, expected_criteria(inj.kind), expected_risks(inj.kind)});
    for (std::size_t i = 0; i < spec.reviewed.size(); ++i) {
        Annotation a;
        a.id = "sim-" + std::to_string(i + 1);
        a.interval = spec.reviewed[i];
        a.annotator = "sim-expert";
        a.note = "reviewed shift";
        out.annotations.push_back(std::move(a));
    }
    return out;
}

inline constexpr std::string_view kGroundTruthHeader = "ts_start,ts_end,kind,expected_criteria,expected_risks";

inline void write_ground_truth_csv(std::ostream& out, std::span<const GroundTruth> rows) {
    out << kGroundTruthHeader << '\n';
    for (const auto& g : rows) {
        std::vector<std::string> crit, risks;
        for (auto c : g.criteria) crit.emplace_back(to_string(c));
        for (auto r : g.risks) risks.emplace_back(risk_code(r));
        out << g.interval.start << ',' << g.interval.end << ',' << to_string(g.kind) << ',' << text::join(crit, ";") << ','
            << text::join(risks, ";") << '\n';
    }
}

/// `calendar.*` keys of the plant calendar, loadable as pipeline config.
inline std::string calendar_config(const WorkCalendar& c) {
    KvConfig kv;
    for (std::size_t d = 0; d < kWeekdayKeys.size(); ++d)
        kv.set("calendar." + std::string(kWeekdayKeys[d]), WorkCalendar::render_day(c.day(static_cast<int>(d))));
    kv.set("calendar.tz", WorkCalendar::render_tz(c.offset_s()));
    return kv.render();
}

/// Writes one ingest CSV per UTC day plus ground_truth.csv,
/// annotations.csv and calendar.conf. Returns the day files written.
inline std::vector<std::filesystem::path> write_simulation(const SimulationResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    std::size_t i = 0;
    while (i < r.samples.size()) {
        const auto day = civil::day_start(r.samples[i].ts);
        std::size_t j = i;
        while (j < r.samples.size() && civil::day_start(r.samples[j].ts) == day) ++j;
        auto path = dir / (civil::day_string(day) + ".csv");
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write " + path.string());
        write_ingest_csv(f, std::span<const SensorSample>(r.samples.data() + i, j - i));
        files.push_back(std::move(path));
        i = j;
    }
    std::ofstream gt(dir / "ground_truth.csv", std::ios::binary);
    write_ground_truth_csv(gt, r.truth);
    std::ofstream an(dir / "annotations.csv", std::ios::binary);
    write_annotations_csv(an, r.annotations);
    std::ofstream cal(dir / "calendar.conf", std::ios::binary);
    cal << calendar_config(r.calendar);
    if (!gt || !an || !cal) throw Error("cannot write simulation metadata in " + dir.string());
    return files;
}

}  // namespace machwatch::sim

#endif  // MACHWATCH_SIM_SIMULATE_HPP
