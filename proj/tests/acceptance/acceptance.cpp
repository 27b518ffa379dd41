// Acceptance checks. One PASS/FAIL line per check; exit status 1 if any fails.

#include "machwatch/service/pipeline.hpp"
#include "machwatch/sim/catalog.hpp"
#include "machwatch/sim/simulate.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace machwatch;

namespace {

using clock_type = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& why) {
        if (!ok && pass) detail = why;
        pass = pass && ok;
    }
};

int failures = 0;

void check(const std::string& name, double budget_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = clock_type::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
    if (budget_s > 0) o.require(secs < budget_s, "runtime " + std::to_string(secs) + " s over budget " + std::to_string(budget_s) + " s");
    if (!o.pass) ++failures;
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << std::fixed;
    line.precision(1);
    line << secs << " s)";
    if (!o.detail.empty()) line << "  " << o.detail;
    std::cout << line.str() << std::endl;
}

std::string ingest_text(const SampleBuffer& s) {
    std::ostringstream out;
    write_ingest_csv(out, s);
    return out.str();
}

void load(SeriesStore& st, const sim::SimulationResult& r) {
    st.append(r.samples);
    for (const auto& a : r.annotations) st.upsert_annotation(a);
}

// Default thresholds and models on the simulated plant's calendar.
PipelineConfig plant_config(std::uint64_t seed) {
    auto kv = KvConfig::parse(sim::calendar_config(sim::plant_calendar()));
    kv.set("pipeline.seed", std::to_string(seed));
    return PipelineConfig::from_kv(kv);
}

PipelineResult train_plant(std::uint64_t seed) {
    SeriesStore st;
    load(st, sim::simulate(sim::plant_7d(seed)));
    return run_pipeline(st, *st.extent(), plant_config(seed), RunKind::Train, default_matrix());
}

// Train runs from the detection check, reused by the determinism and CSV checks.
std::map<std::uint64_t, PipelineResult> plant_runs;

void oracle_equivalence(Outcome& o) {
    const auto series = fixture::history_series(11);
    const auto history = QuantileStore::build(series);
    const oracle::History ohist(series);
    std::mt19937_64 rng(20221005);
    CriteriaConfig cfg;
    std::size_t mismatches = 0, fired = 0;
    for (int n = 0; n < 1000; ++n) {
        const auto rw = fixture::random_window(rng, 10000);
        const auto w = Window::from_samples(rw.interval, rw.duration_s, rw.samples);
        const auto fs = evaluate_all(w, cfg, history);
        for (auto id : kAllCriteria) {
            const auto expect = oracle::evaluate(id, rw.samples, rw.interval, cfg, ohist);
            const bool skipped = std::any_of(fs.skipped.begin(), fs.skipped.end(), [&](const auto& k) { return k.criterion == id; });
            const auto* f = fs.find(id);
            bool same = skipped == !expect.has_value();
            if (same && expect) {
                same = (f != nullptr) == expect->fired;
                if (same && f) same = std::abs(f->score - static_cast<double>(expect->score)) <= 1e-9 * std::max(1.0, f->score);
            }
            if (!same) ++mismatches;
            fired += f != nullptr;
        }
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " mismatches");
    o.require(fired > 300, "only " + std::to_string(fired) + " firings exercised");
    o.detail = o.pass ? std::to_string(fired) + " firings, 0 mismatches" : o.detail;
}

// Windows whose per-window mean phase current decides the label: above
// 21 A anomalous, below 19 A normal.
TrainingSet current_rule_set(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0, 0.4);
    TrainingSet set;
    set.n_features = feature_count();
    set.classes = {"Normal", "Anomalous"};
    const Seconds t0 = fixture::kTuesday + 9 * 3600;
    for (int k = 0; k < 200; ++k) {
        const bool high = k % 2;
        const double level = high ? std::uniform_real_distribution<double>(21, 40)(rng) : std::uniform_real_distribution<double>(2, 19)(rng);
        const Seconds start = t0 + k * 30;
        SampleBuffer s;
        double sum = 0;
        for (Seconds t = start; t < start + 30; ++t) {
            auto x = fixture::sample(t, std::uniform_real_distribution<double>(30, 60)(rng), level, 0.3 + 0.05 * noise(rng),
                                     fixture::ctx(Operation::Milling, "T05"));
            x.i_r = level + noise(rng);
            x.i_s = level + noise(rng);
            x.i_t = level + noise(rng);
            sum += x.current();
            s.push_back(x);
        }
        // keep the margin exact on the window mean
        const double shift = level - sum / 30.0;
        for (auto& x : s) {
            x.i_r += shift;
            x.i_s += shift;
            x.i_t += shift;
        }
        const auto w = Window::from_samples({start, start + 30}, 30, std::move(s));
        set.add_row(extract_features(w), high ? 1 : 0);
    }
    return set;
}

void threshold_recovery(Outcome& o) {
    int hits = 0;
    std::string misses;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Hyperparams hp;
        hp.max_depth = 1;
        hp.seed = seed;
        const auto m = train_cart(current_rule_set(seed), hp);
        const auto& root = m.trees.at(0).nodes.at(0);
        const auto& name = m.feature_names.at(static_cast<std::size_t>(root.feature));
        const bool current_split = name.rfind("i_", 0) == 0;
        if (current_split && root.threshold > 19 && root.threshold < 21)
            ++hits;
        else
            misses += " seed " + std::to_string(seed) + ": " + name + " <= " + std::to_string(root.threshold);
    }
    o.require(hits >= 19, std::to_string(hits) + "/20 in range;" + misses);
    if (o.pass) o.detail = std::to_string(hits) + "/20 seeds split inside (19, 21)";
}

void fold_arithmetic(Outcome& o) {
    SeriesStore st;
    load(st, sim::simulate(sim::plant_7d(1)));
    const auto windows = st.segment_windows(*st.extent(), 30, 30);
    const auto annotations = st.all_annotations();
    const auto history = QuantileStore::build(*st.snapshot());
    std::vector<Window> annotated;
    std::vector<FiringSet> fs;
    for (const auto& w : windows) {
        if (w.empty()) continue;
        if (std::none_of(annotations.begin(), annotations.end(), [&](const Annotation& a) { return a.interval.intersects(w.interval()); }))
            continue;
        annotated.push_back(w);
        fs.push_back(evaluate_all(w, plant_config(1).criteria, history));
    }
    const auto ds = label_windows(annotated, fs, default_taxonomy(), annotations);
    const auto data = build_training_set(ds, Target::MultiClass);
    const auto m = cross_validate(data, {"cart", ModelKind::CART, {}}, 10, 1);
    o.require(m.folds.size() == 10, "fold count " + std::to_string(m.folds.size()));
    o.require(m.total() == data.rows(), "confusion total " + std::to_string(m.total()) + " != " + std::to_string(data.rows()));
    for (std::size_t c = 0; c < m.classes.size(); ++c) {
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& f : m.folds) {
            lo = std::min(lo, f.class_counts.at(c));
            hi = std::max(hi, f.class_counts.at(c));
        }
        o.require(hi - lo <= 1, "class " + m.classes[c] + " fold counts range " + std::to_string(lo) + ".." + std::to_string(hi));
    }
    std::size_t fold_total = 0;
    for (const auto& f : m.folds) fold_total += f.size;
    o.require(fold_total == data.rows(), "fold sizes do not add up");
    if (o.pass) o.detail = std::to_string(data.rows()) + " rows, " + std::to_string(m.classes.size()) + " classes";
}

void multiclass_detection(Outcome& o) {
    std::string scores;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto& r = plant_runs[seed] = train_plant(seed);
        o.require(r.status == RunStatus::Done, "seed " + std::to_string(seed) + ": " + r.error);
        if (r.status != RunStatus::Done) continue;
        const auto metrics = nlohmann::json::parse(r.find("metrics.json")->content);
        double f1 = -1;
        for (const auto& c : metrics.at("candidates"))
            if (c.at("name") == metrics.at("selected")) f1 = c.at("metrics").at("f1_macro").get<double>();
        char buf[64];
        std::snprintf(buf, sizeof buf, " %llu:%s=%.4f", static_cast<unsigned long long>(seed),
                      metrics.at("selected").get<std::string>().c_str(), f1);
        scores += buf;
        o.require(f1 >= 0.90, "seed " + std::to_string(seed) + " F1-macro " + std::to_string(f1));
    }
    if (o.pass) o.detail = "F1-macro" + scores;
}

void matrix_fidelity(Outcome& o) {
    static const std::vector<std::vector<int>> table = {
        {1, 2, 4, 10}, {3, 4, 5}, {1, 2, 3, 5}, {7}, {3, 4, 5, 6, 10}, {5, 6}, {1, 5, 8, 10}, {10}, {6, 9}, {2},
    };
    const auto m = default_matrix();
    for (std::size_t c = 0; c < kCriterionCount; ++c)
        for (std::size_t r = 0; r < kRiskCount; ++r) {
            const bool want = std::count(table[c].begin(), table[c].end(), static_cast<int>(r + 1)) > 0;
            o.require(m.at(kAllCriteria[c], risk_at(r)) == want, std::string(kCriterionTokens[c]) + " R" + std::to_string(r + 1));
        }

    std::size_t dos_windows = 0, dos_cyber = 0, tamper_windows = 0, tamper_r9 = 0;
    std::vector<sim::ScenarioSpec> specs{sim::single_kind_scenario(sim::InjectionKind::PlcDos, 1),
                                         sim::single_kind_scenario(sim::InjectionKind::CncTamper, 1)};
    for (std::uint64_t seed = 1; seed <= 3; ++seed) specs.push_back(sim::plant_7d(seed));
    for (const auto& spec : specs) {
        const auto r = sim::simulate(spec);
        SeriesStore st;
        st.append(r.samples);
        const auto history = QuantileStore::build(r.samples);
        CriteriaConfig cfg;
        cfg.work_calendar = spec.calendar;
        for (const auto& truth : r.truth) {
            if (truth.kind == sim::InjectionKind::PlcDos) {
                for (const auto& w : st.segment_windows(truth.interval, 30, 30)) {
                    if (w.empty()) continue;
                    ++dos_windows;
                    const auto a = attribute(evaluate_all(w, cfg, history), m, w.interval());
                    dos_cyber += a.origin == Origin::CyberIncident && a.includes(RiskId::CyberPlcDos);
                }
            } else if (truth.kind == sim::InjectionKind::CncTamper) {
                const Interval around{truth.interval.start - 120, truth.interval.end + 120};
                for (const auto& w : st.segment_windows(around, 120, 120)) {
                    if (w.empty() || !w.interval().intersects(truth.interval)) continue;
                    const auto fs = evaluate_all(w, cfg, history);
                    if (!fs.contains(CriterionId::ZeroDrop)) continue;
                    ++tamper_windows;
                    tamper_r9 += attribute(fs, m, w.interval()).includes(RiskId::CyberCncTampering);
                }
            }
        }
    }
    o.require(dos_windows > 0 && dos_cyber == dos_windows,
              "PlcDos " + std::to_string(dos_cyber) + "/" + std::to_string(dos_windows) + " CyberIncident");
    o.require(tamper_windows > 0 && tamper_r9 == tamper_windows,
              "CncTamper " + std::to_string(tamper_r9) + "/" + std::to_string(tamper_windows) + " with R9");
    if (o.pass)
        o.detail = "100 cells; PlcDos " + std::to_string(dos_windows) + "/" + std::to_string(dos_windows) + ", CncTamper+ZeroDrop " +
                   std::to_string(tamper_windows) + "/" + std::to_string(tamper_windows);
}

void pipeline_determinism(Outcome& o) {
    if (!plant_runs.contains(1)) plant_runs[1] = train_plant(1);
    const auto& a = plant_runs[1];
    const auto b = train_plant(1);
    o.require(a.status == RunStatus::Done && b.status == RunStatus::Done, "run failed: " + a.error + b.error);
    o.require(a.artifacts.size() == 4 && b.artifacts.size() == 4, "artifact count");
    for (std::size_t i = 0; i < std::min(a.artifacts.size(), b.artifacts.size()); ++i) {
        o.require(a.artifacts[i].name == b.artifacts[i].name, "artifact order");
        o.require(sha256_hex(a.artifacts[i].content) == sha256_hex(b.artifacts[i].content), a.artifacts[i].name + " digest differs");
    }
    if (o.pass) o.detail = "4 artifact digests equal";
}

void csv_contracts(Outcome& o) {
    std::size_t detections = 0;
    for (auto& [seed, r] : plant_runs) {
        const auto* a = r.find("detections.csv");
        if (!a) continue;
        std::istringstream in(a->content);
        const auto rows = parse_detections_csv(in);
        detections += rows.size();
        o.require(detections_csv(rows) == a->content, "detections re-export differs for seed " + std::to_string(seed));
    }
    o.require(detections > 0, "no detections exported");

    std::size_t samples = 0;
    for (const auto& spec : sim::default_scenarios(3)) {
        const auto r = sim::simulate(spec);
        SeriesStore st;
        const auto rep = st.ingest_csv_text(ingest_text(r.samples));
        samples += rep.accepted;
        o.require(rep.rejected == 0, spec.name + ": " + std::to_string(rep.rejected) + " rejects");
        o.require(rep.accepted == r.samples.size(), spec.name + ": accepted count");
    }
    if (o.pass) o.detail = std::to_string(detections) + " detections, " + std::to_string(samples) + " samples, 0 rejects";
}

void gini_and_metrics(Outcome& o) {
    o.require(std::abs(gini({3, 3}) - 0.5) <= 1e-12, "gini(3,3)");
    o.require(std::abs(gini({2, 3, 5}) - 0.62) <= 1e-12, "gini(2,3,5)");
    std::mt19937_64 rng(77);
    for (int n = 0; n < 100; ++n) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 7)(rng);
        std::vector<std::vector<std::size_t>> cm(k, std::vector<std::size_t>(k));
        std::vector<std::string> classes;
        for (std::size_t i = 0; i < k; ++i) {
            classes.push_back("c" + std::to_string(i));
            for (auto& v : cm[i]) v = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
        }
        const auto m = EvalMetrics::from_confusion(classes, cm);
        o.require(std::abs(m.micro_recall - m.accuracy) <= 1e-12, "matrix " + std::to_string(n));
    }
}

void windowing_conservation(Outcome& o) {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 50; ++trial) {
        SampleBuffer rows;
        std::vector<std::int64_t> ts;
        const double keep = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        Seconds t = fixture::kTuesday;
        while (t < fixture::kTuesday + 20000) {
            if (std::bernoulli_distribution(0.002)(rng)) t += std::uniform_int_distribution<Seconds>(1, 3000)(rng);
            if (std::bernoulli_distribution(keep)(rng)) {
                rows.push_back(fixture::sample(t, 30, 12, 0.2, fixture::ctx(Operation::Milling, "T05")));
                ts.push_back(t);
            }
            ++t;
        }
        SeriesStore st;
        st.append(rows);
        const int d = std::uniform_int_distribution<int>(1, 2000)(rng);
        const Interval range{fixture::kTuesday - std::uniform_int_distribution<Seconds>(0, 500)(rng),
                             t + std::uniform_int_distribution<Seconds>(-3000, 500)(rng)};
        const auto ws = st.segment_windows(range, d, d);
        const auto counts = oracle::tile_counts(ts, range, d);
        std::size_t total = 0, expected = 0;
        bool same = ws.size() == counts.size();
        for (std::size_t i = 0; same && i < ws.size(); ++i) {
            same = ws[i].size() == counts[i];
            total += ws[i].size();
        }
        for (auto x : ts) expected += range.contains(x);
        o.require(same, "trial " + std::to_string(trial) + ": window counts differ from brute force");
        o.require(total == expected, "trial " + std::to_string(trial) + ": " + std::to_string(total) + " != " + std::to_string(expected));
    }
}

}  // namespace

int main() {
    check("criteria oracle equivalence, 1000 windows", 30, oracle_equivalence);
    check("threshold recovery, depth-1 split in (19, 21) for >= 19/20 seeds", 60, threshold_recovery);
    check("stratified 10-fold arithmetic", 0, fold_arithmetic);
    check("plant-7d multi-class F1-macro >= 0.90, seeds 1-5", 300, multiclass_detection);
    check("matrix fidelity and cyber attribution", 0, matrix_fidelity);
    check("pipeline determinism", 0, pipeline_determinism);
    check("CSV contracts", 0, csv_contracts);
    check("gini and metrics identities", 0, gini_and_metrics);
    check("windowing conservation, 50 gap patterns", 0, windowing_conservation);
    std::cout << (failures ? std::to_string(failures) + " check(s) failed" : std::string("all checks passed")) << std::endl;
    return failures ? 1 : 0;
}
