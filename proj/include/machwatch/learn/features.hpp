#ifndef MACHWATCH_LEARN_FEATURES_HPP
#define MACHWATCH_LEARN_FEATURES_HPP

#include "machwatch/timeseries/types.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace machwatch {

inline constexpr int kFeatureSchemaVersion = 1;

/// Feature layout, schema version 1:
///
///   for ch in temp, i_r, i_s, i_t, i_mean, vib:   ch_mean ch_std ch_min ch_max
///   for ch in i_r, i_s, i_t, i_mean, vib:         ch_peak_count ch_slope
///   temp_slope vib_rms i_mean_step hour_utc weekday_utc
///   op_<Operation> x6, mat_<Material> x5, access_<Access> x2   (fraction of samples)
///   coverage
///
/// `vib` is the per-sample acceleration magnitude, vib_rms the window RMS
/// used by the rule criteria. Slopes are least-squares per minute, std is
/// the population deviation, peak_count counts samples above mean + 2 std.
inline const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const char* ch : {"temp", "i_r", "i_s", "i_t", "i_mean", "vib"})
            for (const char* st : {"mean", "std", "min", "max"}) n.push_back(std::string(ch) + "_" + st);
        for (const char* ch : {"i_r", "i_s", "i_t", "i_mean", "vib"}) {
            n.push_back(std::string(ch) + "_peak_count");
            n.push_back(std::string(ch) + "_slope");
        }
        for (const char* f : {"temp_slope", "vib_rms", "i_mean_step", "hour_utc", "weekday_utc"}) n.emplace_back(f);
        for (auto t : kOperationTokens) n.push_back("op_" + std::string(t));
        for (auto t : kMaterialTokens) n.push_back("mat_" + std::string(t));
        for (auto t : kAccessTokens) n.push_back("access_" + std::string(t));
        n.emplace_back("coverage");
        return n;
    }();
    return names;
}

inline std::size_t feature_count() { return feature_names().size(); }

namespace feature_detail {

struct ChannelStats {
    double mean = 0, std = 0, min = 0, max = 0, peak_count = 0, slope = 0;
};

inline ChannelStats channel_stats(std::span<const double> v, std::span<const double> t) {
    ChannelStats c;
    const double n = static_cast<double>(v.size());
    c.min = v[0];
    c.max = v[0];
    for (double x : v) {
        c.mean += x;
        c.min = std::min(c.min, x);
        c.max = std::max(c.max, x);
    }
    c.mean /= n;
    double var = 0;
    for (double x : v) var += (x - c.mean) * (x - c.mean);
    c.std = std::sqrt(var / n);
    const double limit = c.mean + 2.0 * c.std;
    for (double x : v)
        if (x > limit) c.peak_count += 1;
    if (v.size() >= 2) {
        double mt = 0;
        for (double x : t) mt += x;
        mt /= n;
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            sxy += (t[i] - mt) * (v[i] - c.mean);
            sxx += (t[i] - mt) * (t[i] - mt);
        }
        c.slope = sxx > 0 ? 60.0 * sxy / sxx : 0.0;
    }
    return c;
}

}  // namespace feature_detail

/// Aggregate features of one window in the documented order.
inline std::vector<double> extract_features(const Window& w) {
    using feature_detail::channel_stats;
    const auto s = w.samples();
    if (s.empty()) throw DataError("cannot extract features from an empty window");
    const std::size_t n = s.size();

    std::vector<double> t(n);
    std::vector<std::vector<double>> ch(6, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<double>(s[i].ts - w.interval().start);
        ch[0][i] = s[i].temp;
        ch[1][i] = s[i].i_r;
        ch[2][i] = s[i].i_s;
        ch[3][i] = s[i].i_t;
        ch[4][i] = s[i].current();
        ch[5][i] = std::sqrt(s[i].vib_sq());
    }

    std::vector<double> f;
    f.reserve(feature_count());
    std::vector<feature_detail::ChannelStats> stats;
    for (const auto& c : ch) stats.push_back(channel_stats(c, t));
    for (const auto& c : stats) {
        f.push_back(c.mean);
        f.push_back(c.std);
        f.push_back(c.min);
        f.push_back(c.max);
    }
    for (std::size_t c = 1; c < 6; ++c) {
        f.push_back(stats[c].peak_count);
        f.push_back(stats[c].slope);
    }
    f.push_back(stats[0].slope);

    double vib_sq = 0;
    for (const auto& x : s) vib_sq += x.vib_sq();
    f.push_back(std::sqrt(vib_sq / static_cast<double>(n)));

    const std::size_t half = n / 2;
    double first = 0, second = 0;
    for (std::size_t i = 0; i < n; ++i) (i < half ? first : second) += ch[4][i];
    f.push_back(half > 0 ? std::abs(second / static_cast<double>(n - half) - first / static_cast<double>(half)) : 0.0);

    const Seconds start = w.interval().start;
    f.push_back(static_cast<double>(start - civil::day_start(start)) / 3600.0);
    f.push_back(static_cast<double>(civil::weekday_monday0(start)));

    double op[6] = {}, mat[5] = {}, acc[2] = {};
    for (const auto& x : s) {
        op[static_cast<int>(x.ctx.operation)] += 1;
        mat[static_cast<int>(x.ctx.material)] += 1;
        acc[static_cast<int>(x.ctx.access)] += 1;
    }
    for (double v : op) f.push_back(v / static_cast<double>(n));
    for (double v : mat) f.push_back(v / static_cast<double>(n));
    for (double v : acc) f.push_back(v / static_cast<double>(n));
    f.push_back(w.coverage());
    return f;
}

}  // namespace machwatch

#endif  // MACHWATCH_LEARN_FEATURES_HPP
