#ifndef MACHWATCH_SERVICE_PIPELINE_HPP
#define MACHWATCH_SERVICE_PIPELINE_HPP

#include "machwatch/criteria/evaluate.hpp"
#include "machwatch/criteria/history.hpp"
#include "machwatch/kv_config.hpp"
#include "machwatch/labeling/labeling.hpp"
#include "machwatch/learn/export.hpp"
#include "machwatch/learn/predict.hpp"
#include "machwatch/learn/validation.hpp"
#include "machwatch/risk/matrix.hpp"
#include "machwatch/service/digest.hpp"
#include "machwatch/timeseries/store.hpp"

#include <json.hpp>

#include <chrono>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace machwatch {

enum class RunKind : std::uint8_t { Label, Train, Detect, Attribute };
enum class RunStatus : std::uint8_t { Pending, Running, Done, Failed };

inline constexpr std::array<std::string_view, 4> kRunKindTokens{"Label", "Train", "Detect", "Attribute"};
inline constexpr std::array<std::string_view, 4> kRunStatusTokens{"Pending", "Running", "Done", "Failed"};

inline std::string_view to_string(RunKind k) { return kRunKindTokens[static_cast<std::size_t>(k)]; }
inline std::string_view to_string(RunStatus s) { return kRunStatusTokens[static_cast<std::size_t>(s)]; }
inline RunKind parse_run_kind(std::string_view s) {
    for (std::size_t i = 0; i < kRunKindTokens.size(); ++i)
        if (kRunKindTokens[i] == s) return static_cast<RunKind>(i);
    throw DataError("unknown run kind '" + std::string(s) + "'");
}
inline RunStatus parse_run_status(std::string_view s) {
    for (std::size_t i = 0; i < kRunStatusTokens.size(); ++i)
        if (kRunStatusTokens[i] == s) return static_cast<RunStatus>(i);
    throw DataError("unknown run status '" + std::string(s) + "'");
}

/// Artifacts each run kind must produce.
inline std::vector<std::string> declared_artifacts(RunKind k) {
    switch (k) {
    case RunKind::Label: return {"labeled.csv"};
    case RunKind::Train: return {"detections.csv", "model.json", "metrics.json", "assessments.json"};
    case RunKind::Detect: return {"detections.csv", "assessments.json"};
    case RunKind::Attribute: return {"assessments.json"};
    }
    return {};
}

/// Candidate grid: one CART, one random forest, one extra-trees ensemble.
inline std::vector<ModelSpec> default_candidates(std::uint64_t seed) {
    return {
        {"cart", ModelKind::CART, {12, 1, 1, 0, false, seed}},
        {"forest", ModelKind::RandomForest, {12, 1, 30, 0, true, seed}},
        {"extra", ModelKind::ExtraTrees, {12, 1, 30, 0, false, seed}},
    };
}

struct PipelineConfig {
    Target target = Target::MultiClass;
    int window_s = 30;
    double coverage_floor = 0.5;
    std::uint64_t seed = 1;
    int folds = 10;
    bool exclude_low_coverage = true;
    CriteriaConfig criteria;
    Taxonomy taxonomy = default_taxonomy();
    std::vector<ModelSpec> candidates = default_candidates(1);

    /// `pipeline.*`, `model.*`, `taxonomy.*`, criterion and calendar keys.
    /// `pipeline.mode = binary` switches to 900 s windows and Normal /
    /// Anomalous targets unless `pipeline.window_s` says otherwise.
    static PipelineConfig from_kv(const KvConfig& kv) {
        PipelineConfig c;
        const auto mode = kv.get("pipeline.mode").value_or("multiclass");
        if (mode == "binary") {
            c.target = Target::Binary;
            c.window_s = 900;
        } else if (mode != "multiclass") {
            throw DataError("pipeline.mode must be multiclass or binary, got '" + mode + "'");
        }
        c.window_s = static_cast<int>(kv.get_int("pipeline.window_s", c.window_s));
        c.coverage_floor = kv.get_double("pipeline.coverage_floor", c.coverage_floor);
        c.seed = static_cast<std::uint64_t>(kv.get_int("pipeline.seed", 1));
        c.folds = static_cast<int>(kv.get_int("pipeline.folds", c.folds));
        c.exclude_low_coverage = kv.get_bool("pipeline.exclude_low_coverage", true);
        if (c.window_s < 1) throw DataError("pipeline.window_s must be >= 1");
        if (!(c.coverage_floor >= 0 && c.coverage_floor <= 1)) throw DataError("pipeline.coverage_floor must lie in [0, 1]");
        if (c.folds < 2) throw DataError("pipeline.folds must be >= 2");
        for (const auto& [key, value] : kv.entries()) {
            if (key.rfind("pipeline.", 0) != 0) continue;
            static const std::vector<std::string> known{"pipeline.mode", "pipeline.window_s", "pipeline.coverage_floor",
                                                        "pipeline.seed", "pipeline.folds", "pipeline.exclude_low_coverage"};
            if (std::find(known.begin(), known.end(), key) == known.end()) throw DataError("unknown pipeline key '" + key + "'");
        }
        c.criteria = CriteriaConfig::from_kv(kv);
        if (auto t = Taxonomy::from_kv(kv)) c.taxonomy = std::move(*t);

        c.candidates = default_candidates(c.seed);
        if (auto names = kv.get("model.candidates")) {
            std::vector<ModelSpec> chosen;
            for (auto tok : text::split(*names, ',')) {
                const std::string name(text::trim(tok));
                auto it = std::find_if(c.candidates.begin(), c.candidates.end(), [&](const ModelSpec& s) { return s.name == name; });
                ModelSpec s = it != c.candidates.end() ? *it : ModelSpec{name, ModelKind::CART, {12, 1, 1, 0, false, c.seed}};
                chosen.push_back(std::move(s));
            }
            if (chosen.empty()) throw DataError("model.candidates is empty");
            c.candidates = std::move(chosen);
        }
        for (auto& s : c.candidates) {
            const auto p = "model." + s.name + ".";
            if (auto k = kv.get(p + "kind")) s.kind = parse_model_kind(*k);
            auto& h = s.hyperparams;
            h.max_depth = static_cast<int>(kv.get_int(p + "max_depth", h.max_depth));
            h.min_samples_leaf = static_cast<int>(kv.get_int(p + "min_samples_leaf", h.min_samples_leaf));
            h.n_trees = static_cast<int>(kv.get_int(p + "n_trees", h.n_trees));
            h.features_per_split = static_cast<int>(kv.get_int(p + "features_per_split", h.features_per_split));
            h.bootstrap = kv.get_bool(p + "bootstrap", h.bootstrap);
            if (h.max_depth < 1 || h.min_samples_leaf < 1 || h.n_trees < 1 || h.features_per_split < 0)
                throw DataError("invalid hyperparameters for candidate '" + s.name + "'");
        }
        return c;
    }

    [[nodiscard]] KvConfig to_kv() const {
        KvConfig kv = criteria.to_kv();
        const auto tax = taxonomy.to_kv();
        for (const auto& [k, v] : tax.entries()) kv.set(k, v);
        kv.set("pipeline.mode", target == Target::Binary ? "binary" : "multiclass");
        kv.set("pipeline.window_s", std::to_string(window_s));
        kv.set("pipeline.coverage_floor", text::format_double(coverage_floor));
        kv.set("pipeline.seed", std::to_string(seed));
        kv.set("pipeline.folds", std::to_string(folds));
        kv.set("pipeline.exclude_low_coverage", exclude_low_coverage ? "true" : "false");
        std::vector<std::string> names;
        for (const auto& s : candidates) {
            names.push_back(s.name);
            const auto p = "model." + s.name + ".";
            kv.set(p + "kind", std::string(to_string(s.kind)));
            kv.set(p + "max_depth", std::to_string(s.hyperparams.max_depth));
            kv.set(p + "min_samples_leaf", std::to_string(s.hyperparams.min_samples_leaf));
            kv.set(p + "n_trees", std::to_string(s.hyperparams.n_trees));
            kv.set(p + "features_per_split", std::to_string(s.hyperparams.features_per_split));
            kv.set(p + "bootstrap", s.hyperparams.bootstrap ? "true" : "false");
        }
        kv.set("model.candidates", text::join(names, ","));
        return kv;
    }
};

struct Artifact {
    std::string name;
    std::string content;
};

struct PipelineResult {
    RunStatus status = RunStatus::Pending;
    std::string error;  // "<stage>: <cause>" when Failed
    std::vector<Artifact> artifacts;
    std::optional<TreeModel> model;
    double wall_seconds = 0;  // metadata only

    [[nodiscard]] const Artifact* find(std::string_view name) const {
        for (const auto& a : artifacts)
            if (a.name == name) return &a;
        return nullptr;
    }
};

namespace pipeline_detail {

struct StageError : Error {
    StageError(const std::string& stage, const std::string& cause) : Error(stage + ": " + cause) {}
};

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

inline std::string assessments_json(std::span<const Window> windows, std::span<const FiringSet> firings, const RiskMatrix& m) {
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (firings[i].firings.empty()) continue;
        arr.push_back(to_json(attribute(firings[i], m, windows[i].interval())));
    }
    return arr.dump(1) + "\n";
}

/// Model id derived from content, so reruns name their models identically.
inline void assign_model_id(TreeModel& m) {
    m.id.clear();
    m.id = "m-" + sha256_hex(m.serialize()).substr(0, 12);
}

}  // namespace pipeline_detail

/// segment -> criteria -> label -> train -> predict -> attribute, with the
/// stages each run kind needs. Detect requires `model`. Every artifact is a
/// pure function of the store contents in `range`, the config and the
/// matrix.
inline PipelineResult run_pipeline(const SeriesStore& store, Interval range, const PipelineConfig& cfg, RunKind kind,
                                   const RiskMatrix& matrix, const TreeModel* model = nullptr) {
    using namespace pipeline_detail;
    const auto t0 = std::chrono::steady_clock::now();
    PipelineResult out;
    try {
        if (kind == RunKind::Detect && !model) throw StageError("detect", "no model");

        std::vector<Window> windows = stage("segmentation", [&] {
            if (range.empty() || !store.has_data(range)) throw DataError("no data");
            std::vector<Window> ws;
            for (auto& w : store.segment_windows(range, cfg.window_s, cfg.window_s, cfg.coverage_floor))
                if (!w.empty()) ws.push_back(std::move(w));
            return ws;
        });

        std::vector<FiringSet> firings = stage("criteria", [&] {
            cfg.criteria.validate();
            const auto series = store.query_series(range);
            const auto history = QuantileStore::build(series);
            std::vector<FiringSet> fs;
            fs.reserve(windows.size());
            for (const auto& w : windows) fs.push_back(evaluate_all(w, cfg.criteria, history));
            return fs;
        });

        if (kind == RunKind::Label || kind == RunKind::Train) {
            LabeledDataset ds = stage("label", [&] {
                const auto annotations = store.list_annotations(range);
                std::vector<Window> annotated;
                std::vector<FiringSet> annotated_fs;
                for (std::size_t i = 0; i < windows.size(); ++i) {
                    const bool hit = std::any_of(annotations.begin(), annotations.end(),
                                                 [&](const Annotation& a) { return a.interval.intersects(windows[i].interval()); });
                    if (!hit) continue;
                    annotated.push_back(windows[i]);
                    annotated_fs.push_back(firings[i]);
                }
                auto d = label_windows(annotated, annotated_fs, cfg.taxonomy, annotations);
                d.window_duration_s = cfg.window_s;
                return d;
            });
            if (kind == RunKind::Label) {
                std::ostringstream csv;
                write_labeled_csv(csv, ds);
                out.artifacts.push_back({"labeled.csv", csv.str()});
            } else {
                auto [trained, metrics_json] = stage("train", [&] {
                    const auto data = build_training_set(ds, cfg.target, cfg.exclude_low_coverage);
                    if (data.classes.size() < 2) throw DataError("annotated windows carry fewer than two labels");
                    std::vector<std::pair<ModelSpec, EvalMetrics>> evaluated;
                    for (const auto& spec : cfg.candidates) evaluated.emplace_back(spec, cross_validate(data, spec, cfg.folds, cfg.seed));
                    const auto best = select_model(evaluated);
                    auto m = train_model(evaluated[best].first.kind, data, evaluated[best].first.hyperparams);
                    assign_model_id(m);
                    nlohmann::json j;
                    j["selected"] = evaluated[best].first.name;
                    j["model_id"] = m.id;
                    j["target"] = cfg.target == Target::Binary ? "binary" : "multiclass";
                    j["window_s"] = cfg.window_s;
                    j["training_rows"] = data.rows();
                    j["classes"] = data.classes;
                    auto cands = nlohmann::json::array();
                    for (const auto& [spec, em] : evaluated)
                        cands.push_back({{"name", spec.name},
                                         {"kind", std::string(to_string(spec.kind))},
                                         {"n_trees", spec.hyperparams.n_trees},
                                         {"max_depth", spec.hyperparams.max_depth},
                                         {"metrics", em.to_json()}});
                    j["candidates"] = std::move(cands);
                    return std::pair{std::move(m), j.dump(1) + "\n"};
                });
                out.model = std::move(trained);
                model = &*out.model;
                out.artifacts.push_back({"model.json", out.model->serialize()});
                out.artifacts.push_back({"metrics.json", std::move(metrics_json)});
            }
        }

        if (kind == RunKind::Train || kind == RunKind::Detect) {
            auto csv = stage("predict", [&] {
                const auto preds = predict(*model, windows);
                std::vector<Detection> rows;
                rows.reserve(preds.size());
                for (std::size_t i = 0; i < preds.size(); ++i)
                    rows.push_back({windows[i].interval(), cfg.window_s, preds[i].predicted_class, preds[i].confidence,
                                    firings[i].ids(), model->id});
                return detections_csv(rows);
            });
            out.artifacts.insert(out.artifacts.begin(), Artifact{"detections.csv", std::move(csv)});
        }

        if (kind != RunKind::Label)
            out.artifacts.push_back({"assessments.json", stage("attribute", [&] { return assessments_json(windows, firings, matrix); })});
        out.status = RunStatus::Done;
    } catch (const std::exception& e) {
        out.status = RunStatus::Failed;
        out.error = e.what();
        out.artifacts.clear();
        out.model.reset();
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace machwatch

#endif  // MACHWATCH_SERVICE_PIPELINE_HPP
