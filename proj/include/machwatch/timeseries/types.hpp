#ifndef MACHWATCH_TIMESERIES_TYPES_HPP
#define MACHWATCH_TIMESERIES_TYPES_HPP

#include "machwatch/civil_time.hpp"
#include "machwatch/error.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace machwatch {

using civil::Seconds;

enum class Operation : std::uint8_t { Drilling, Facing, Milling, Contouring, Special, Idle };
enum class Material : std::uint8_t { Steel, Aluminium, Plastic, StainlessSteel, Other };
enum class Access : std::uint8_t { Local, Remote };
enum class IncidentClass : std::uint8_t { MachineFault, CyberIncident, Benign, Unspecified };

inline constexpr std::array<std::string_view, 6> kOperationTokens{"Drilling", "Facing", "Milling", "Contouring", "Special", "Idle"};
inline constexpr std::array<std::string_view, 5> kMaterialTokens{"Steel", "Aluminium", "Plastic", "StainlessSteel", "Other"};
inline constexpr std::array<std::string_view, 2> kAccessTokens{"Local", "Remote"};
inline constexpr std::array<std::string_view, 4> kIncidentTokens{"MachineFault", "CyberIncident", "Benign", "Unspecified"};

namespace detail {
template <typename E, std::size_t N>
E parse_token(std::string_view s, const std::array<std::string_view, N>& tokens, std::string_view what) {
    for (std::size_t i = 0; i < N; ++i)
        if (tokens[i] == s) return static_cast<E>(i);
    throw DataError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}
}  // namespace detail

inline std::string_view to_string(Operation v) { return kOperationTokens[static_cast<std::size_t>(v)]; }
inline std::string_view to_string(Material v) { return kMaterialTokens[static_cast<std::size_t>(v)]; }
inline std::string_view to_string(Access v) { return kAccessTokens[static_cast<std::size_t>(v)]; }
inline std::string_view to_string(IncidentClass v) { return kIncidentTokens[static_cast<std::size_t>(v)]; }

inline Operation parse_operation(std::string_view s) { return detail::parse_token<Operation>(s, kOperationTokens, "operation"); }
inline Material parse_material(std::string_view s) { return detail::parse_token<Material>(s, kMaterialTokens, "material"); }
inline Access parse_access(std::string_view s) { return detail::parse_token<Access>(s, kAccessTokens, "access"); }
inline IncidentClass parse_incident_class(std::string_view s) { return detail::parse_token<IncidentClass>(s, kIncidentTokens, "incident class"); }

inline constexpr std::string_view kNoTool = "none";

struct ProcessContext {
    Operation operation = Operation::Idle;
    std::string tool{kNoTool};
    Material material = Material::Other;
    Access access = Access::Local;

    friend bool operator==(const ProcessContext&, const ProcessContext&) = default;
};

/// Throws DataError when the context breaks its invariants.
inline void validate(const ProcessContext& ctx) {
    if (ctx.tool.empty()) throw DataError("empty tool identifier");
    if (ctx.operation == Operation::Idle && ctx.tool != kNoTool)
        throw DataError("Idle operation must carry tool 'none', got '" + ctx.tool + "'");
}

/// One 1 Hz reading.
struct SensorSample {
    Seconds ts = 0;
    double temp = 0;   // °C
    double i_r = 0;    // A
    double i_s = 0;
    double i_t = 0;
    double acc_x = 0;  // g, gravity-compensated
    double acc_y = 0;
    double acc_z = 0;
    ProcessContext ctx;

    [[nodiscard]] double current() const noexcept { return (i_r + i_s + i_t) / 3.0; }
    [[nodiscard]] double vib_sq() const noexcept { return acc_x * acc_x + acc_y * acc_y + acc_z * acc_z; }

    friend bool operator==(const SensorSample&, const SensorSample&) = default;
};

/// Plausibility bounds applied on ingestion.
struct PlausibilityLimits {
    double temp_min = -40.0;
    double temp_max = 400.0;
};

inline void validate(const SensorSample& s, const PlausibilityLimits& lim = {}) {
    if (s.i_r < 0 || s.i_s < 0 || s.i_t < 0) throw DataError("negative phase current");
    if (!(s.temp >= lim.temp_min && s.temp <= lim.temp_max))
        throw DataError("temperature outside plausibility bounds");
    validate(s.ctx);
}

/// Half-open time interval [start, end) in epoch seconds.
struct Interval {
    Seconds start = 0;
    Seconds end = 0;

    [[nodiscard]] bool empty() const noexcept { return end <= start; }
    [[nodiscard]] Seconds length() const noexcept { return end > start ? end - start : 0; }
    [[nodiscard]] bool contains(Seconds ts) const noexcept { return ts >= start && ts < end; }
    [[nodiscard]] bool intersects(const Interval& o) const noexcept { return start < o.end && o.start < end; }
    [[nodiscard]] bool within(const Interval& o) const noexcept { return start >= o.start && end <= o.end; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Expert note over a time span. The interval is half-open like windows,
/// so an annotation [t, t+30) touches exactly one 30 s window.
struct Annotation {
    std::string id;
    Interval interval;
    std::string note;
    std::string annotator;
    std::optional<IncidentClass> incident_class;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

using SampleBuffer = std::vector<SensorSample>;

/// Fixed-duration slice of a sample buffer. Windows share the underlying
/// immutable buffer, so copying one is cheap.
class Window {
public:
    Window() = default;

    Window(Interval interval, int duration_s, std::shared_ptr<const SampleBuffer> source,
           std::size_t begin, std::size_t end, double coverage_floor = 0.5)
        : interval_(interval), duration_s_(duration_s), source_(std::move(source)), begin_(begin), end_(end) {
        if (duration_s_ < 1) throw DataError("window duration must be >= 1 s");
        coverage_ = std::min(1.0, static_cast<double>(end_ - begin_) / duration_s_);
        low_coverage_ = coverage_ < coverage_floor;
    }

    /// Build a window that owns its samples. Every sample must fall inside interval.
    static Window from_samples(Interval interval, int duration_s, SampleBuffer samples, double coverage_floor = 0.5) {
        for (const auto& s : samples)
            if (!interval.contains(s.ts)) throw DataError("sample ts " + std::to_string(s.ts) + " outside window interval");
        const auto n = samples.size();
        return Window(interval, duration_s, std::make_shared<const SampleBuffer>(std::move(samples)), 0, n, coverage_floor);
    }

    [[nodiscard]] const Interval& interval() const noexcept { return interval_; }
    [[nodiscard]] int duration_s() const noexcept { return duration_s_; }
    [[nodiscard]] double coverage() const noexcept { return coverage_; }
    [[nodiscard]] bool low_coverage() const noexcept { return low_coverage_; }
    [[nodiscard]] std::size_t size() const noexcept { return end_ - begin_; }
    [[nodiscard]] bool empty() const noexcept { return end_ == begin_; }

    [[nodiscard]] std::span<const SensorSample> samples() const noexcept {
        if (!source_) return {};
        return std::span<const SensorSample>(*source_).subspan(begin_, end_ - begin_);
    }

private:
    Interval interval_;
    int duration_s_ = 1;
    std::shared_ptr<const SampleBuffer> source_;
    std::size_t begin_ = 0;
    std::size_t end_ = 0;
    double coverage_ = 0;
    bool low_coverage_ = true;
};

}  // namespace machwatch

#endif  // MACHWATCH_TIMESERIES_TYPES_HPP
