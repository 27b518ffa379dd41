#ifndef MACHWATCH_TIMESERIES_STORE_HPP
#define MACHWATCH_TIMESERIES_STORE_HPP

#include "machwatch/timeseries/csv.hpp"
#include "machwatch/timeseries/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace machwatch {

inline void to_json(nlohmann::json& j, const Annotation& a) {
    j = nlohmann::json{{"id", a.id},
                       {"ts_start", a.interval.start},
                       {"ts_end", a.interval.end},
                       {"note", a.note},
                       {"annotator", a.annotator},
                       {"incident_class", a.incident_class ? nlohmann::json(std::string(to_string(*a.incident_class)))
                                                           : nlohmann::json(nullptr)}};
}

inline void from_json(const nlohmann::json& j, Annotation& a) {
    try {
        a.id = j.value("id", std::string{});
        a.interval.start = j.at("ts_start").get<Seconds>();
        a.interval.end = j.at("ts_end").get<Seconds>();
        a.note = j.value("note", std::string{});
        a.annotator = j.value("annotator", std::string{});
        a.incident_class.reset();
        if (j.contains("incident_class") && !j.at("incident_class").is_null())
            a.incident_class = parse_incident_class(j.at("incident_class").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad annotation: ") + e.what());
    }
}

/// Optional query filters; unset members match everything.
struct SeriesFilter {
    std::optional<Operation> operation;
    std::optional<std::string> tool;
    std::optional<Material> material;
    std::optional<Access> access;
    std::optional<std::string> day;  // "YYYY-MM-DD", UTC midnight boundaries

    [[nodiscard]] bool matches(const SensorSample& s) const {
        if (operation && s.ctx.operation != *operation) return false;
        if (tool && s.ctx.tool != *tool) return false;
        if (material && s.ctx.material != *material) return false;
        if (access && s.ctx.access != *access) return false;
        return true;
    }
};

/// Append-only 1 Hz series with annotations.
///
/// In-memory by default. Given a data directory, every accepted row is
/// appended to `series/YYYY-MM-DD.csv` and every annotation write to
/// `annotations.jsonl`; both are replayed on open.
///
/// Single writer, many readers: writes serialize on one mutex and publish a
/// new immutable snapshot; readers work on the snapshot current when they
/// started.
class SeriesStore {
public:
    SeriesStore() : samples_(std::make_shared<const SampleBuffer>()), annotations_(std::make_shared<const AnnotationMap>()) {}

    explicit SeriesStore(std::filesystem::path data_dir, PlausibilityLimits limits = {})
        : SeriesStore() {
        limits_ = limits;
        dir_ = std::move(data_dir);
        std::filesystem::create_directories(*dir_ / "series");
        load();
    }

    SeriesStore(const SeriesStore&) = delete;
    SeriesStore& operator=(const SeriesStore&) = delete;

    void set_coverage_floor(double floor) { coverage_floor_ = floor; }
    [[nodiscard]] double coverage_floor() const noexcept { return coverage_floor_; }

    // ---- ingestion -------------------------------------------------------

    IngestReport ingest_csv(std::istream& in) {
        auto parsed = parse_ingest_csv(in, limits_);
        std::lock_guard writer(write_mu_);
        merge(parsed.rows, parsed.lines, parsed.report);
        return std::move(parsed.report);
    }

    IngestReport ingest_csv_text(const std::string& body) {
        std::istringstream in(body);
        return ingest_csv(in);
    }

    /// Programmatic append with the same validation and duplicate rules as
    /// CSV ingestion. Rows are reported by their 1-based position.
    IngestReport append(std::span<const SensorSample> rows) {
        IngestReport report;
        std::vector<SensorSample> ok;
        std::vector<std::size_t> lines;
        ok.reserve(rows.size());
        std::optional<Seconds> last;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            try {
                validate(rows[i], limits_);
                if (last && rows[i].ts <= *last) throw DataError("non-monotonic ts " + std::to_string(rows[i].ts));
                last = rows[i].ts;
                ok.push_back(rows[i]);
                lines.push_back(i + 1);
            } catch (const DataError& e) {
                report.reject(i + 1, e.what());
            }
        }
        std::lock_guard writer(write_mu_);
        merge(ok, lines, report);
        return report;
    }

    // ---- reads -----------------------------------------------------------

    [[nodiscard]] std::shared_ptr<const SampleBuffer> snapshot() const {
        std::lock_guard lk(snap_mu_);
        return samples_;
    }

    [[nodiscard]] std::size_t size() const { return snapshot()->size(); }

    /// [first ts, last ts + 1), or nothing when empty.
    [[nodiscard]] std::optional<Interval> extent() const {
        auto snap = snapshot();
        if (snap->empty()) return std::nullopt;
        return Interval{snap->front().ts, snap->back().ts + 1};
    }

    /// Distinct UTC days holding data, ascending.
    [[nodiscard]] std::vector<std::string> days() const {
        auto snap = snapshot();
        std::vector<std::string> out;
        Seconds current = 0;
        bool any = false;
        for (const auto& s : *snap) {
            const auto d = civil::day_start(s.ts);
            if (!any || d != current) {
                out.push_back(civil::day_string(s.ts));
                current = d;
                any = true;
            }
        }
        return out;
    }

    [[nodiscard]] std::size_t count_in(const Interval& range) const {
        auto snap = snapshot();
        auto [b, e] = bounds(*snap, range);
        return e - b;
    }

    [[nodiscard]] SampleBuffer query_series(Interval range, const SeriesFilter& filter = {}) const {
        if (range.end <= range.start)
            throw DataError("inverted or empty range [" + std::to_string(range.start) + ", " + std::to_string(range.end) + ")");
        if (filter.day) {
            const auto d0 = civil::parse_day(*filter.day);
            range.start = std::max(range.start, d0);
            range.end = std::min(range.end, d0 + civil::kDay);
        }
        SampleBuffer out;
        if (range.empty()) return out;
        auto snap = snapshot();
        auto [b, e] = bounds(*snap, range);
        for (auto i = b; i < e; ++i)
            if (filter.matches((*snap)[i])) out.push_back((*snap)[i]);
        return out;
    }

    /// Windows tile `range` from its start. The last window is truncated at
    /// the range end rather than extending past it; coverage is always
    /// measured against the nominal duration.
    [[nodiscard]] std::vector<Window> segment_windows(Interval range, int duration_s, int stride_s,
                                                      std::optional<double> coverage_floor = {}) const {
        if (duration_s < 1) throw DataError("window duration must be >= 1 s");
        if (stride_s < 1) throw DataError("window stride must be >= 1 s");
        std::vector<Window> out;
        if (range.empty()) return out;
        auto snap = snapshot();
        for (Seconds start = range.start; start < range.end; start += stride_s) {
            const Interval iv{start, std::min(start + duration_s, range.end)};
            auto [b, e] = bounds(*snap, iv);
            out.emplace_back(iv, duration_s, snap, b, e, coverage_floor.value_or(coverage_floor_));
            if (iv.end == range.end) break;
        }
        return out;
    }

    [[nodiscard]] bool has_data(const Interval& range) const { return count_in(range) > 0; }

    // ---- annotations -----------------------------------------------------

    /// Insert or replace. An empty id is assigned ("a-<n>"). Returns the id.
    std::string upsert_annotation(Annotation a) {
        if (a.interval.end <= a.interval.start)
            throw DataError("annotation interval must satisfy ts_start < ts_end");
        std::lock_guard writer(write_mu_);
        if (!has_data(a.interval))
            throw DataError("annotation interval [" + std::to_string(a.interval.start) + ", " +
                            std::to_string(a.interval.end) + ") contains no stored data");
        auto next = std::make_shared<AnnotationMap>(*annotation_snapshot());
        if (a.id.empty()) a.id = "a-" + std::to_string(++annotation_seq_);
        bump_sequence(a.id);
        if (dir_) append_annotation_log({{"op", "upsert"}, {"annotation", a}});
        (*next)[a.id] = a;
        publish_annotations(std::move(next));
        return a.id;
    }

    [[nodiscard]] std::vector<Annotation> list_annotations(const Interval& range) const {
        std::vector<Annotation> out;
        for (const auto& [id, a] : *annotation_snapshot())
            if (a.interval.intersects(range)) out.push_back(a);
        std::stable_sort(out.begin(), out.end(), [](const Annotation& x, const Annotation& y) {
            return x.interval.start != y.interval.start ? x.interval.start < y.interval.start : x.id < y.id;
        });
        return out;
    }

    [[nodiscard]] std::vector<Annotation> all_annotations() const {
        return list_annotations(Interval{std::numeric_limits<Seconds>::min(), std::numeric_limits<Seconds>::max()});
    }

    void delete_annotation(const std::string& id) {
        std::lock_guard writer(write_mu_);
        auto next = std::make_shared<AnnotationMap>(*annotation_snapshot());
        if (next->erase(id) == 0) throw NotFound("unknown annotation id '" + id + "'");
        if (dir_) append_annotation_log({{"op", "delete"}, {"id", id}});
        publish_annotations(std::move(next));
    }

private:
    using AnnotationMap = std::map<std::string, Annotation>;

    static std::pair<std::size_t, std::size_t> bounds(const SampleBuffer& buf, const Interval& range) {
        auto by_ts = [](const SensorSample& s, Seconds t) { return s.ts < t; };
        auto b = std::lower_bound(buf.begin(), buf.end(), range.start, by_ts);
        auto e = std::lower_bound(b, buf.end(), range.end, by_ts);
        return {static_cast<std::size_t>(b - buf.begin()), static_cast<std::size_t>(e - buf.begin())};
    }

    [[nodiscard]] std::shared_ptr<const AnnotationMap> annotation_snapshot() const {
        std::lock_guard lk(snap_mu_);
        return annotations_;
    }

    void publish_annotations(std::shared_ptr<const AnnotationMap> next) {
        std::lock_guard lk(snap_mu_);
        annotations_ = std::move(next);
    }

    // Caller holds write_mu_. `rows` are strictly increasing.
    void merge(const std::vector<SensorSample>& rows, const std::vector<std::size_t>& lines, IngestReport& report) {
        auto current = snapshot();
        std::vector<SensorSample> fresh;
        fresh.reserve(rows.size());
        auto by_ts = [](const SensorSample& s, Seconds t) { return s.ts < t; };
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto it = std::lower_bound(current->begin(), current->end(), rows[i].ts, by_ts);
            if (it != current->end() && it->ts == rows[i].ts) {
                if (*it == rows[i]) {
                    ++report.duplicates;
                } else {
                    report.reject(lines[i], "ts " + std::to_string(rows[i].ts) + " already stored with different values");
                }
                continue;
            }
            fresh.push_back(rows[i]);
        }
        if (fresh.empty()) return;
        if (dir_) persist(fresh);

        auto next = std::make_shared<SampleBuffer>();
        if (current->empty() || current->back().ts < fresh.front().ts) {
            next->reserve(current->size() + fresh.size());
            next->insert(next->end(), current->begin(), current->end());
            next->insert(next->end(), fresh.begin(), fresh.end());
        } else {
            next->resize(current->size() + fresh.size());
            std::merge(current->begin(), current->end(), fresh.begin(), fresh.end(), next->begin(),
                       [](const SensorSample& a, const SensorSample& b) { return a.ts < b.ts; });
        }
        report.accepted += fresh.size();
        std::lock_guard lk(snap_mu_);
        samples_ = std::move(next);
    }

    void persist(const std::vector<SensorSample>& rows) {
        std::size_t i = 0;
        while (i < rows.size()) {
            const auto day = civil::day_string(rows[i].ts);
            const auto path = *dir_ / "series" / (day + ".csv");
            const bool fresh_file = !std::filesystem::exists(path);
            std::ofstream out(path, std::ios::app);
            if (!out) throw Error("cannot append to " + path.string());
            if (fresh_file) out << kIngestHeader << '\n';
            const auto end_of_day = civil::day_start(rows[i].ts) + civil::kDay;
            for (; i < rows.size() && rows[i].ts < end_of_day; ++i) out << format_sample_row(rows[i]) << '\n';
            out.flush();
            if (!out) throw Error("write failed on " + path.string());
        }
    }

    void append_annotation_log(const nlohmann::json& record) {
        std::ofstream out(*dir_ / "annotations.jsonl", std::ios::app);
        out << record.dump() << '\n';
        out.flush();
        if (!out) throw Error("cannot append annotation log");
    }

    void load() {
        auto buf = std::make_shared<SampleBuffer>();
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(*dir_ / "series"))
            if (entry.path().extension() == ".csv") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& path : files) {
            std::ifstream in(path);
            std::string line;
            std::getline(in, line);
            std::size_t line_no = 1;
            while (std::getline(in, line)) {
                ++line_no;
                if (text::trim(line).empty()) continue;
                try {
                    buf->push_back(parse_sample_row(line, limits_));
                } catch (const DataError& e) {
                    throw Error("corrupt store file " + path.string() + ":" + std::to_string(line_no) + ": " + e.what());
                }
            }
        }
        std::stable_sort(buf->begin(), buf->end(), [](const SensorSample& a, const SensorSample& b) { return a.ts < b.ts; });
        samples_ = std::move(buf);

        auto ann = std::make_shared<AnnotationMap>();
        std::ifstream in(*dir_ / "annotations.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (text::trim(line).empty()) continue;
            const auto rec = nlohmann::json::parse(line);
            if (rec.at("op") == "upsert") {
                auto a = rec.at("annotation").get<Annotation>();
                bump_sequence(a.id);
                (*ann)[a.id] = std::move(a);
            } else {
                ann->erase(rec.at("id").get<std::string>());
            }
        }
        annotations_ = std::move(ann);
    }

    void bump_sequence(const std::string& id) {
        if (id.rfind("a-", 0) != 0) return;
        try {
            annotation_seq_ = std::max<std::int64_t>(annotation_seq_, text::parse_int(std::string_view(id).substr(2)));
        } catch (const DataError&) {
        }
    }

    std::optional<std::filesystem::path> dir_;
    PlausibilityLimits limits_;
    double coverage_floor_ = 0.5;
    std::int64_t annotation_seq_ = 0;

    mutable std::mutex snap_mu_;
    std::mutex write_mu_;
    std::shared_ptr<const SampleBuffer> samples_;
    std::shared_ptr<const AnnotationMap> annotations_;
};

}  // namespace machwatch

#endif  // MACHWATCH_TIMESERIES_STORE_HPP
