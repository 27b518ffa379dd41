// Random window generators shared by unit and acceptance tests.
#ifndef MACHWATCH_TESTS_FIXTURES_HPP
#define MACHWATCH_TESTS_FIXTURES_HPP

#include "machwatch/timeseries/types.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace fixture {

using namespace machwatch;

inline ProcessContext ctx(Operation op, const char* tool, Material m = Material::Steel, Access a = Access::Local) {
    return {op, tool, m, a};
}

inline SensorSample sample(Seconds ts, double temp, double i, double vib_axis, const ProcessContext& c) {
    SensorSample s;
    s.ts = ts;
    s.temp = temp;
    s.i_r = s.i_s = s.i_t = i;
    s.acc_x = s.acc_y = s.acc_z = vib_axis;
    s.ctx = c;
    return s;
}

/// 2022-10-04 00:00 UTC, a Tuesday.
inline constexpr Seconds kTuesday = 1664841600;

/// Nominal history for the random-window contexts (Facing/T09 is left out on
/// purpose so some windows hit a missing group).
inline std::vector<SensorSample> history_series(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<SensorSample> out;
    Seconds t = kTuesday - 7 * 86400;
    const ProcessContext groups[] = {ctx(Operation::Idle, "none", Material::Other), ctx(Operation::Milling, "T05"),
                                     ctx(Operation::Drilling, "T01", Material::Aluminium)};
    const double level[] = {0.4, 14.0, 6.3};
    for (int g = 0; g < 3; ++g)
        for (int i = 0; i < 2000; ++i) {
            auto s = sample(t++, 30.0, 0, 0.1, groups[g]);
            s.i_r = std::max(0.0, level[g] + noise(rng));
            s.i_s = std::max(0.0, level[g] + noise(rng));
            s.i_t = std::max(0.0, level[g] + noise(rng));
            out.push_back(s);
        }
    return out;
}

struct RandomWindow {
    Interval interval;
    int duration_s = 0;
    SampleBuffer samples;
};

/// Windows mixing every regime the criteria react to: idle and active
/// currents, zero runs, steps, spikes, temperature ramps, quiet and violent
/// vibration, gaps, context switches and off-hours timestamps.
inline RandomWindow random_window(std::mt19937_64& rng, int max_len = 10000) {
    auto pick = [&](auto const& choices) { return choices[std::uniform_int_distribution<std::size_t>(0, std::size(choices) - 1)(rng)]; };
    auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };

    RandomWindow w;
    static constexpr int durations[] = {2, 5, 30, 30, 30, 61, 90, 120, 300, 900, 900};
    w.duration_s = chance(0.1) ? std::uniform_int_distribution<int>(1, max_len)(rng) : pick(durations);
    const Seconds start = kTuesday + std::uniform_int_distribution<Seconds>(0, 6 * 86400)(rng);
    w.interval = {start, start + w.duration_s};

    static const ProcessContext contexts[] = {ctx(Operation::Idle, "none", Material::Other), ctx(Operation::Milling, "T05"),
                                              ctx(Operation::Drilling, "T01", Material::Aluminium), ctx(Operation::Facing, "T09")};
    const ProcessContext c1 = chance(0.03) ? contexts[3] : contexts[std::uniform_int_distribution<int>(0, 2)(rng)];
    const ProcessContext c2 = chance(0.2) ? contexts[std::uniform_int_distribution<int>(0, 2)(rng)] : c1;
    const Seconds switch_at = start + std::uniform_int_distribution<Seconds>(0, w.duration_s)(rng);

    static constexpr double levels[] = {0.0, 0.1, 0.5, 0.9, 1.1, 5.0, 14.0, 14.4, 22.0};
    static constexpr double noises[] = {0.0, 0.05, 0.3, 2.0};
    static constexpr double vibs[] = {0.0, 0.01, 0.04, 0.06, 0.3, 0.6, 1.4, 1.6, 3.0};
    const double level = pick(levels), sigma = pick(noises), vib = pick(vibs) / std::sqrt(3.0);
    const double keep = chance(0.5) ? 1.0 : pick(std::array{0.95, 0.6, 0.3});
    const double slope = chance(0.5) ? 0.0 : uni(-3.0, 12.0);  // °C/min
    const double temp_noise = pick(std::array{0.0, 0.05, 0.5});
    const bool zero_run = chance(0.3);
    const Seconds zero_from = start + std::uniform_int_distribution<Seconds>(0, w.duration_s)(rng);
    const Seconds zero_len = std::uniform_int_distribution<Seconds>(10, 90)(rng);
    const bool step = chance(0.3);
    const Seconds step_at = start + std::uniform_int_distribution<Seconds>(0, w.duration_s)(rng);
    const double step_delta = uni(-8.0, 8.0);
    const double spike_p = chance(0.3) ? uni(0.0, 0.4) : 0.0;

    std::normal_distribution<double> n01(0.0, 1.0);
    for (Seconds t = start; t < w.interval.end; ++t) {
        if (!chance(keep)) continue;
        SensorSample s;
        s.ts = t;
        s.ctx = t < switch_at ? c1 : c2;
        double base = level + (step && t >= step_at ? step_delta : 0.0);
        const bool zero = zero_run && t >= zero_from && t < zero_from + zero_len;
        double* ph[3] = {&s.i_r, &s.i_s, &s.i_t};
        for (int p = 0; p < 3; ++p) {
            double v = zero ? uni(0.0, 0.25) : base + sigma * n01(rng);
            if (!zero && spike_p > 0 && chance(spike_p / 3)) v += uni(5.0, 15.0);
            *ph[p] = std::round(std::max(0.0, v) * 1000) / 1000;
        }
        s.temp = 30.0 + slope * static_cast<double>(t - start) / 60.0 + temp_noise * n01(rng);
        s.acc_x = vib * n01(rng);
        s.acc_y = vib * n01(rng);
        s.acc_z = vib * n01(rng);
        w.samples.push_back(s);
    }
    return w;
}

}  // namespace fixture

#endif  // MACHWATCH_TESTS_FIXTURES_HPP
