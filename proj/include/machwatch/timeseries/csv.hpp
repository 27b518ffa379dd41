#ifndef MACHWATCH_TIMESERIES_CSV_HPP
#define MACHWATCH_TIMESERIES_CSV_HPP

#include "machwatch/text.hpp"
#include "machwatch/timeseries/types.hpp"

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace machwatch {

inline constexpr std::string_view kIngestHeader =
    "ts,temp_c,i_r_a,i_s_a,i_t_a,acc_x_g,acc_y_g,acc_z_g,operation,tool,material,access";

struct RowError {
    std::size_t line = 0;
    std::string message;

    friend bool operator==(const RowError&, const RowError&) = default;
};

struct IngestReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t duplicates = 0;  // rows already stored with identical content
    std::optional<RowError> first_error;
    std::vector<RowError> errors;

    void reject(std::size_t line, std::string message) {
        ++rejected;
        RowError e{line, std::move(message)};
        if (!first_error) first_error = e;
        errors.push_back(std::move(e));
    }
};

inline std::string format_sample_row(const SensorSample& s) {
    std::string row;
    row.reserve(96);
    row += std::to_string(s.ts);
    for (double v : {s.temp, s.i_r, s.i_s, s.i_t, s.acc_x, s.acc_y, s.acc_z}) {
        row += ',';
        row += text::format_double(v);
    }
    row += ',';
    row += to_string(s.ctx.operation);
    row += ',';
    row += s.ctx.tool;
    row += ',';
    row += to_string(s.ctx.material);
    row += ',';
    row += to_string(s.ctx.access);
    return row;
}

/// Parse one data row. Throws DataError describing the first problem.
inline SensorSample parse_sample_row(std::string_view line, const PlausibilityLimits& limits = {}) {
    const auto fields = text::split(line, ',');
    if (fields.size() != 12)
        throw DataError("expected 12 fields, got " + std::to_string(fields.size()));
    SensorSample s;
    s.ts = text::parse_int(fields[0]);
    double* reals[] = {&s.temp, &s.i_r, &s.i_s, &s.i_t, &s.acc_x, &s.acc_y, &s.acc_z};
    for (std::size_t i = 0; i < 7; ++i) *reals[i] = text::parse_double(fields[i + 1]);
    s.ctx.operation = parse_operation(fields[8]);
    s.ctx.tool = std::string(fields[9]);
    s.ctx.material = parse_material(fields[10]);
    s.ctx.access = parse_access(fields[11]);
    validate(s, limits);
    return s;
}

/// Rows of one CSV stream that passed row-level validation, plus the
/// report of rejected rows. Timestamps must increase strictly within a
/// stream; a row that goes backwards is rejected.
struct ParsedCsv {
    std::vector<SensorSample> rows;
    std::vector<std::size_t> lines;  // source line of each row
    IngestReport report;
};

inline ParsedCsv parse_ingest_csv(std::istream& in, const PlausibilityLimits& limits = {}) {
    ParsedCsv out;
    std::string line;
    if (!std::getline(in, line)) throw DataError("malformed header: empty stream");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line != kIngestHeader) throw DataError("malformed header: '" + line + "'");

    std::size_t line_no = 1;
    std::optional<Seconds> last_ts;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        try {
            auto s = parse_sample_row(line, limits);
            if (last_ts && s.ts <= *last_ts)
                throw DataError("non-monotonic ts " + std::to_string(s.ts) + " after " + std::to_string(*last_ts));
            last_ts = s.ts;
            out.rows.push_back(std::move(s));
            out.lines.push_back(line_no);
        } catch (const DataError& e) {
            out.report.reject(line_no, e.what());
        }
    }
    return out;
}

inline void write_ingest_csv(std::ostream& out, std::span<const SensorSample> samples) {
    out << kIngestHeader << '\n';
    for (const auto& s : samples) out << format_sample_row(s) << '\n';
}

inline constexpr std::string_view kAnnotationsHeader = "ts_start,ts_end,annotator,incident_class,note";

/// Notes may not contain commas or newlines; empty incident_class means none.
inline void write_annotations_csv(std::ostream& out, std::span<const Annotation> anns) {
    out << kAnnotationsHeader << '\n';
    for (const auto& a : anns) {
        out << a.interval.start << ',' << a.interval.end << ',' << a.annotator << ','
            << (a.incident_class ? std::string(to_string(*a.incident_class)) : std::string()) << ',' << a.note << '\n';
    }
}

inline std::vector<Annotation> parse_annotations_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != kAnnotationsHeader) throw DataError("malformed annotations header");
    std::vector<Annotation> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = text::split(line, ',');
        if (f.size() != 5) throw DataError("annotations line " + std::to_string(line_no) + ": expected 5 fields");
        Annotation a;
        a.interval = {text::parse_int(f[0]), text::parse_int(f[1])};
        a.annotator = std::string(f[2]);
        if (!f[3].empty()) a.incident_class = parse_incident_class(f[3]);
        a.note = std::string(f[4]);
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace machwatch

#endif  // MACHWATCH_TIMESERIES_CSV_HPP
