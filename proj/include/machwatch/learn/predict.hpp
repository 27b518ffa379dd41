#ifndef MACHWATCH_LEARN_PREDICT_HPP
#define MACHWATCH_LEARN_PREDICT_HPP

#include "machwatch/labeling/labeling.hpp"
#include "machwatch/learn/features.hpp"
#include "machwatch/learn/tree.hpp"

#include <span>
#include <string>
#include <vector>

namespace machwatch {

enum class Target : std::uint8_t { MultiClass, Binary };

/// Feature matrix for a labeled dataset. Multi-class targets use taxonomy
/// class names, binary targets Normal/Anomalous; only labels that occur
/// become classes, in taxonomy order. Low-coverage windows are skipped
/// unless asked otherwise.
inline TrainingSet build_training_set(const LabeledDataset& ds, Target target, bool exclude_low_coverage = true) {
    TrainingSet set;
    set.n_features = feature_count();
    std::vector<std::string> all;
    if (target == Target::Binary) {
        for (auto t : kBinaryTokens) all.emplace_back(t);
    } else {
        for (const auto& c : ds.taxonomy.classes()) all.push_back(c.name);
    }
    auto label_of = [&](const LabeledWindow& r) {
        if (target == Target::Binary) return static_cast<int>(r.binary_label);
        for (std::size_t i = 0; i < ds.taxonomy.classes().size(); ++i)
            if (ds.taxonomy.classes()[i].id == r.class_label) return static_cast<int>(i);
        throw DataError("label outside taxonomy");
    };
    std::vector<char> present(all.size(), 0);
    std::vector<int> raw;
    for (const auto& r : ds.rows) {
        if (r.window.empty() || (exclude_low_coverage && r.window.low_coverage())) continue;
        const int y = label_of(r);
        present[static_cast<std::size_t>(y)] = 1;
        set.add_row(extract_features(r.window), y);
    }
    std::vector<int> remap(all.size(), -1);
    for (std::size_t i = 0; i < all.size(); ++i)
        if (present[i]) {
            remap[i] = static_cast<int>(set.classes.size());
            set.classes.push_back(all[i]);
        }
    for (auto& y : set.y) y = remap[static_cast<std::size_t>(y)];
    return set;
}

struct WindowPrediction {
    Window window;
    std::string predicted_class;
    double confidence = 0;
};

/// Predict every window. Windows must hold samples.
inline std::vector<WindowPrediction> predict(const TreeModel& model, std::span<const Window> windows) {
    if (model.feature_schema_version != kFeatureSchemaVersion)
        throw DataError("model feature schema v" + std::to_string(model.feature_schema_version) + " does not match v" +
                        std::to_string(kFeatureSchemaVersion));
    std::vector<WindowPrediction> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        const auto p = predict_row(model, extract_features(w));
        out.push_back({w, model.classes[static_cast<std::size_t>(p.class_index)], p.confidence});
    }
    return out;
}

}  // namespace machwatch

#endif  // MACHWATCH_LEARN_PREDICT_HPP
