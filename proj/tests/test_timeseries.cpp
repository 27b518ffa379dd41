#include "machwatch/timeseries/store.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

using namespace machwatch;

namespace {

std::string csv(std::initializer_list<std::string> rows) {
    std::string out(kIngestHeader);
    out += '\n';
    for (const auto& r : rows) out += r + '\n';
    return out;
}

std::string row(Seconds ts, const std::string& op = "Milling", const std::string& tool = "T05", double i = 10.0) {
    return std::to_string(ts) + ",30.5," + std::to_string(i) + ",10.5,11,0.1,-0.2,0.05," + op + "," + tool + ",Steel,Local";
}

SampleBuffer contiguous(Seconds from, Seconds to, const ProcessContext& c = fixture::ctx(Operation::Milling, "T05")) {
    SampleBuffer out;
    for (Seconds t = from; t < to; ++t) out.push_back(fixture::sample(t, 30, 10, 0.1, c));
    return out;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / ("mw-ts-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST(ProcessContext, IdleRequiresToolNone) {
    EXPECT_THROW(validate(ProcessContext{Operation::Idle, "T05", Material::Steel, Access::Local}), DataError);
    EXPECT_NO_THROW(validate(ProcessContext{Operation::Idle, "none", Material::Other, Access::Local}));
}

TEST(ProcessContext, UnknownTokensAreErrorsNotOther) {
    EXPECT_THROW(parse_material("Wood"), DataError);
    EXPECT_THROW(parse_operation("Tornado"), DataError);
    EXPECT_THROW(parse_access("local"), DataError);
    EXPECT_EQ(parse_material("StainlessSteel"), Material::StainlessSteel);
}

TEST(IngestCsv, HeaderOnly) {
    SeriesStore st;
    const auto r = st.ingest_csv_text(csv({}));
    EXPECT_EQ(r.accepted, 0u);
    EXPECT_EQ(r.rejected, 0u);
    EXPECT_FALSE(r.first_error);
}

TEST(IngestCsv, ThreeRowsMatchHandParse) {
    SeriesStore st;
    const auto r = st.ingest_csv_text(csv({row(100), row(101), row(102)}));
    EXPECT_EQ(r.accepted, 3u);
    EXPECT_EQ(r.rejected, 0u);
    const auto got = st.query_series({0, 1000});
    ASSERT_EQ(got.size(), 3u);
    for (int k = 0; k < 3; ++k) {
        const auto& s = got[static_cast<std::size_t>(k)];
        EXPECT_EQ(s.ts, 100 + k);
        EXPECT_DOUBLE_EQ(s.temp, 30.5);
        EXPECT_DOUBLE_EQ(s.i_r, 10.0);
        EXPECT_DOUBLE_EQ(s.i_s, 10.5);
        EXPECT_DOUBLE_EQ(s.i_t, 11.0);
        EXPECT_DOUBLE_EQ(s.acc_x, 0.1);
        EXPECT_DOUBLE_EQ(s.acc_y, -0.2);
        EXPECT_DOUBLE_EQ(s.acc_z, 0.05);
        EXPECT_EQ(s.ctx.operation, Operation::Milling);
        EXPECT_EQ(s.ctx.tool, "T05");
        EXPECT_EQ(s.ctx.material, Material::Steel);
        EXPECT_EQ(s.ctx.access, Access::Local);
    }
}

TEST(IngestCsv, UnknownOperationRejectedAtItsLine) {
    SeriesStore st;
    const auto r = st.ingest_csv_text(csv({row(100), row(101, "Tornado"), row(102)}));
    EXPECT_EQ(r.accepted, 2u);
    EXPECT_EQ(r.rejected, 1u);
    ASSERT_TRUE(r.first_error);
    EXPECT_EQ(r.first_error->line, 3u);
    EXPECT_NE(r.first_error->message.find("Tornado"), std::string::npos);
}

TEST(IngestCsv, MalformedHeaderRejectsWholeFile) {
    SeriesStore st;
    EXPECT_THROW(st.ingest_csv_text("ts,temp\n1,2\n"), DataError);
    EXPECT_EQ(st.size(), 0u);
}

TEST(IngestCsv, NonMonotonicRowRejected) {
    SeriesStore st;
    const auto r = st.ingest_csv_text(csv({row(100), row(102), row(101)}));
    EXPECT_EQ(r.accepted, 2u);
    EXPECT_EQ(r.rejected, 1u);
    EXPECT_EQ(r.first_error->line, 4u);
}

TEST(IngestCsv, PlausibilityAndSignChecks) {
    SeriesStore st;
    const auto r = st.ingest_csv_text(csv({"100,500,1,1,1,0,0,0,Milling,T05,Steel,Local", "101,30,-1,1,1,0,0,0,Milling,T05,Steel,Local",
                                           "102,30,1,1,1,0,0,0,Idle,T05,Steel,Local", "103,30,1,1,1,0,0,0,Idle,none,Other,Local"}));
    EXPECT_EQ(r.accepted, 1u);
    EXPECT_EQ(r.rejected, 3u);
}

TEST(IngestCsv, IdempotentPerTimestamp) {
    SeriesStore st;
    st.ingest_csv_text(csv({row(100), row(101)}));
    const auto again = st.ingest_csv_text(csv({row(100), row(101)}));
    EXPECT_EQ(again.accepted, 0u);
    EXPECT_EQ(again.duplicates, 2u);
    EXPECT_EQ(again.rejected, 0u);
    EXPECT_EQ(st.size(), 2u);
    const auto conflict = st.ingest_csv_text(csv({row(100, "Milling", "T05", 99.0)}));
    EXPECT_EQ(conflict.rejected, 1u);
    EXPECT_DOUBLE_EQ(st.query_series({0, 1000})[0].i_r, 10.0);
}

TEST(IngestCsv, BackfillKeepsOrder) {
    SeriesStore st;
    st.ingest_csv_text(csv({row(100), row(105)}));
    st.ingest_csv_text(csv({row(102), row(103)}));
    const auto got = st.query_series({0, 1000});
    ASSERT_EQ(got.size(), 4u);
    for (std::size_t i = 1; i < got.size(); ++i) EXPECT_LT(got[i - 1].ts, got[i].ts);
}

TEST(IngestCsv, RoundTripThroughQuery) {
    std::mt19937_64 rng(11);
    SampleBuffer rows;
    Seconds t = 1000;
    for (int i = 0; i < 500; ++i) {
        t += std::uniform_int_distribution<int>(1, 4)(rng);
        auto s = fixture::sample(t, std::uniform_real_distribution<double>(20, 80)(rng), std::uniform_real_distribution<double>(0, 30)(rng),
                                 std::uniform_real_distribution<double>(-1, 1)(rng), fixture::ctx(Operation::Drilling, "T01"));
        rows.push_back(s);
    }
    std::ostringstream out;
    write_ingest_csv(out, rows);
    SeriesStore st;
    const auto r = st.ingest_csv_text(out.str());
    EXPECT_EQ(r.accepted, rows.size());
    EXPECT_EQ(st.query_series({0, t + 1}), rows);
}

TEST(QuerySeries, EmptyStoreGivesEmptyList) {
    SeriesStore st;
    EXPECT_TRUE(st.query_series({0, 100}).empty());
}

TEST(QuerySeries, InvertedRangeIsAnError) {
    SeriesStore st;
    EXPECT_THROW((void)st.query_series({100, 50}), DataError);
}

TEST(QuerySeries, DayFilterUsesUtcMidnight) {
    const Seconds oct4 = civil::parse_day("2022-10-04"), oct5 = civil::parse_day("2022-10-05");
    SeriesStore st;
    st.append(contiguous(oct5 - 100, oct5 + 50));
    st.append(contiguous(oct5 + civil::kDay - 10, oct5 + civil::kDay + 10));
    SeriesFilter f;
    f.day = "2022-10-05";
    const auto got = st.query_series({oct4, oct5 + 3 * civil::kDay}, f);
    std::size_t expected = 0;
    for (const auto& s : st.query_series({0, oct5 + 3 * civil::kDay})) expected += s.ts >= oct5 && s.ts < oct5 + civil::kDay;
    EXPECT_EQ(got.size(), expected);
    EXPECT_EQ(got.size(), 60u);
    EXPECT_EQ(got.front().ts, oct5);
    EXPECT_EQ(st.days(), (std::vector<std::string>{"2022-10-04", "2022-10-05", "2022-10-06"}));
}

TEST(QuerySeries, OperationFilterMatchesBruteForce) {
    SeriesStore st;
    SampleBuffer mixed;
    std::mt19937_64 rng(3);
    const ProcessContext cs[] = {fixture::ctx(Operation::Milling, "T05"), fixture::ctx(Operation::Drilling, "T01"),
                                 fixture::ctx(Operation::Idle, "none", Material::Other)};
    for (Seconds t = 0; t < 1000; ++t) mixed.push_back(fixture::sample(t, 30, 5, 0.1, cs[rng() % 3]));
    st.append(mixed);
    SeriesFilter f;
    f.operation = Operation::Milling;
    const auto got = st.query_series({0, 1000}, f);
    SampleBuffer expected;
    for (const auto& s : mixed)
        if (s.ctx.operation == Operation::Milling) expected.push_back(s);
    EXPECT_EQ(got, expected);
    for (std::size_t i = 1; i < got.size(); ++i) EXPECT_LT(got[i - 1].ts, got[i].ts);
}

TEST(SegmentWindows, ContiguousHourGivesFourFullWindows) {
    SeriesStore st;
    st.append(contiguous(0, 3600));
    const auto ws = st.segment_windows({0, 3600}, 900, 900);
    ASSERT_EQ(ws.size(), 4u);
    for (const auto& w : ws) {
        EXPECT_DOUBLE_EQ(w.coverage(), 1.0);
        EXPECT_FALSE(w.low_coverage());
    }
}

TEST(SegmentWindows, GapOf600sFlagsExactlyOneWindow) {
    SeriesStore st;
    st.append(contiguous(0, 900));
    st.append(contiguous(1500, 3600));
    const auto ws = st.segment_windows({0, 3600}, 900, 900);
    ASSERT_EQ(ws.size(), 4u);
    int flagged = 0;
    for (const auto& w : ws) flagged += w.low_coverage();
    EXPECT_EQ(flagged, 1);
    EXPECT_DOUBLE_EQ(ws[1].coverage(), 300.0 / 900.0);
    const auto counts = oracle::tile_counts([&] {
        std::vector<std::int64_t> ts;
        for (const auto& s : st.query_series({0, 3600})) ts.push_back(s.ts);
        return ts;
    }(), {0, 3600}, 900);
    for (std::size_t i = 0; i < ws.size(); ++i) EXPECT_EQ(ws[i].size(), counts[i]);
}

TEST(SegmentWindows, EmptyRangeAndBadArguments) {
    SeriesStore st;
    EXPECT_TRUE(st.segment_windows({10, 10}, 30, 30).empty());
    EXPECT_THROW((void)st.segment_windows({0, 10}, 0, 30), DataError);
    EXPECT_THROW((void)st.segment_windows({0, 10}, 30, 0), DataError);
}

TEST(SegmentWindows, LastWindowTruncatedAtRangeEnd) {
    SeriesStore st;
    st.append(contiguous(0, 100));
    const auto ws = st.segment_windows({0, 100}, 30, 30);
    ASSERT_EQ(ws.size(), 4u);
    EXPECT_EQ(ws.back().interval(), (Interval{90, 100}));
    EXPECT_DOUBLE_EQ(ws.back().coverage(), 10.0 / 30.0);
    for (const auto& w : ws) EXPECT_LE(w.interval().end, 100);
}

TEST(SegmentWindows, OverlappingStride) {
    SeriesStore st;
    st.append(contiguous(0, 120));
    const auto ws = st.segment_windows({0, 120}, 60, 30);
    ASSERT_EQ(ws.size(), 3u);
    EXPECT_EQ(ws[1].interval(), (Interval{30, 90}));
    EXPECT_EQ(ws[1].size(), 60u);
    EXPECT_EQ(ws.back().interval(), (Interval{60, 120}));
}

TEST(SegmentWindows, PartitionAndCoverageOnRandomGaps) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        SeriesStore st;
        SampleBuffer rows;
        std::vector<std::int64_t> ts;
        for (Seconds t = 0; t < 5000; ++t)
            if (std::bernoulli_distribution(0.7)(rng)) {
                rows.push_back(fixture::sample(t, 30, 1, 0.1, fixture::ctx(Operation::Milling, "T05")));
                ts.push_back(t);
            }
        st.append(rows);
        const int d = std::uniform_int_distribution<int>(1, 1000)(rng);
        const Interval range{std::uniform_int_distribution<Seconds>(-100, 200)(rng), std::uniform_int_distribution<Seconds>(4000, 5200)(rng)};
        const auto ws = st.segment_windows(range, d, d);
        const auto counts = oracle::tile_counts(ts, range, d);
        ASSERT_EQ(ws.size(), counts.size());
        std::size_t total = 0;
        double coverage_sum = 0;
        for (std::size_t i = 0; i < ws.size(); ++i) {
            EXPECT_EQ(ws[i].size(), counts[i]);
            for (const auto& s : ws[i].samples()) EXPECT_TRUE(ws[i].interval().contains(s.ts));
            total += ws[i].size();
            coverage_sum += ws[i].coverage() * d;
        }
        EXPECT_EQ(total, st.count_in(range));
        EXPECT_NEAR(coverage_sum, static_cast<double>(st.count_in(range)), 1e-6);
    }
}

TEST(Window, FromSamplesRejectsOutsideSamples) {
    EXPECT_THROW(Window::from_samples({0, 10}, 10, contiguous(5, 15)), DataError);
}

TEST(Annotations, RoundTripIdentical) {
    SeriesStore st;
    st.append(contiguous(0, 100));
    Annotation a{"", {10, 40}, "spindle noise", "ana", IncidentClass::MachineFault};
    const auto id = st.upsert_annotation(a);
    a.id = id;
    const auto got = st.list_annotations({0, 100});
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0], a);
    EXPECT_EQ(nlohmann::json(got[0]).dump(), nlohmann::json(a).dump());
}

TEST(Annotations, DataFreeIntervalRejected) {
    SeriesStore st;
    st.append(contiguous(0, 100));
    EXPECT_THROW(st.upsert_annotation({"", {200, 300}, "", "x", std::nullopt}), DataError);
    EXPECT_THROW(st.upsert_annotation({"", {50, 50}, "", "x", std::nullopt}), DataError);
}

TEST(Annotations, OverlappingBothReturnedInStartOrder) {
    SeriesStore st;
    st.append(contiguous(0, 100));
    st.upsert_annotation({"", {30, 80}, "second", "b", std::nullopt});
    st.upsert_annotation({"", {10, 50}, "first", "a", std::nullopt});
    const auto got = st.list_annotations({0, 100});
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].note, "first");
    EXPECT_EQ(got[1].note, "second");
    EXPECT_EQ(st.list_annotations({60, 70}).size(), 1u);
}

TEST(Annotations, DeleteUnknownIsNotFound) {
    SeriesStore st;
    st.append(contiguous(0, 100));
    const auto id = st.upsert_annotation({"", {10, 20}, "", "a", std::nullopt});
    EXPECT_THROW(st.delete_annotation("nope"), NotFound);
    st.delete_annotation(id);
    EXPECT_TRUE(st.all_annotations().empty());
}

TEST(Annotations, ExplicitIdDoesNotCollideWithLaterAutoIds) {
    SeriesStore st;
    st.append(contiguous(0, 100));
    st.upsert_annotation({"a-1", {10, 20}, "", "a", std::nullopt});
    const auto id = st.upsert_annotation({"", {10, 20}, "", "b", std::nullopt});
    EXPECT_NE(id, "a-1");
    EXPECT_EQ(st.all_annotations().size(), 2u);
}

TEST(Persistence, ReplaysSeriesAndAnnotations) {
    TempDir dir;
    std::string kept;
    {
        SeriesStore st(dir.path);
        st.ingest_csv_text(csv({row(100), row(101), row(86400 + 5)}));
        kept = st.upsert_annotation({"", {100, 102}, "kept", "a", IncidentClass::Benign});
        const auto gone = st.upsert_annotation({"", {100, 101}, "gone", "a", std::nullopt});
        st.delete_annotation(gone);
    }
    SeriesStore again(dir.path);
    EXPECT_EQ(again.size(), 3u);
    const auto anns = again.all_annotations();
    ASSERT_EQ(anns.size(), 1u);
    EXPECT_EQ(anns[0].id, kept);
    EXPECT_EQ(anns[0].incident_class, IncidentClass::Benign);
    EXPECT_TRUE(std::filesystem::exists(dir.path / "series" / "1970-01-01.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir.path / "series" / "1970-01-02.csv"));
}

TEST(CivilTime, ParsesEpochDayAndIso) {
    EXPECT_EQ(civil::parse_time("1664928000"), 1664928000);
    EXPECT_EQ(civil::parse_time("2022-10-05"), 1664928000);
    EXPECT_EQ(civil::parse_time("2022-10-05T01:00:00Z"), 1664931600);
    EXPECT_EQ(civil::weekday_monday0(1664928000), 2);  // Wednesday
    EXPECT_THROW(civil::parse_time("yesterday"), DataError);
}
