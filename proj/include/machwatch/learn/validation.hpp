#ifndef MACHWATCH_LEARN_VALIDATION_HPP
#define MACHWATCH_LEARN_VALIDATION_HPP

#include "machwatch/learn/metrics.hpp"
#include "machwatch/learn/tree.hpp"

#include <chrono>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace machwatch {

struct ModelSpec {
    std::string name;
    ModelKind kind = ModelKind::CART;
    Hyperparams hyperparams;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Fold index per row. Members of each class are shuffled with the seed and
/// dealt round-robin, starting each class where the previous one stopped, so
/// per-class counts differ by at most one between folds.
inline std::vector<int> stratified_folds(std::span<const int> y, std::size_t n_classes, int k, std::uint64_t seed) {
    if (k < 2) throw DataError("cross-validation needs k >= 2");
    std::vector<std::vector<std::size_t>> members(n_classes);
    for (std::size_t i = 0; i < y.size(); ++i) members.at(static_cast<std::size_t>(y[i])).push_back(i);
    std::vector<int> fold(y.size(), -1);
    CounterRng rng(seed, 0x5f01d5ULL);
    std::size_t offset = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto& m = members[c];
        for (std::size_t i = m.size(); i > 1; --i) std::swap(m[i - 1], m[rng.index(i)]);
        for (std::size_t j = 0; j < m.size(); ++j) fold[m[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(k));
        offset = (offset + m.size()) % static_cast<std::size_t>(k);
    }
    return fold;
}

/// Stratified k-fold cross-validation. Metrics are computed on the
/// concatenated out-of-fold predictions over the classes present in `data`.
inline EvalMetrics cross_validate(const TrainingSet& data, const ModelSpec& spec, int k = 10, std::uint64_t fold_seed = 0) {
    std::vector<std::size_t> count(data.classes.size(), 0);
    for (int y : data.y) ++count.at(static_cast<std::size_t>(y));
    std::vector<int> remap(data.classes.size(), -1);
    std::vector<std::string> present;
    for (std::size_t c = 0; c < count.size(); ++c) {
        if (count[c] == 0) continue;
        if (count[c] < static_cast<std::size_t>(k))
            throw DataError("class '" + data.classes[c] + "' has " + std::to_string(count[c]) + " members, fewer than " +
                            std::to_string(k) + " folds");
        remap[c] = static_cast<int>(present.size());
        present.push_back(data.classes[c]);
    }
    TrainingSet compact = data;
    compact.classes = present;
    for (auto& y : compact.y) y = remap[static_cast<std::size_t>(y)];

    const auto fold = stratified_folds(compact.y, present.size(), k, fold_seed);
    std::vector<int> predicted(compact.rows(), -1);
    std::vector<FoldMetrics> folds;
    double train_s = 0, infer_s = 0;
    std::uint64_t visits = 0;
    using clock = std::chrono::steady_clock;
    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < compact.rows(); ++i) (fold[i] == f ? test_idx : train_idx).push_back(i);
        const auto t0 = clock::now();
        const auto model = train_model(spec.kind, compact.subset(train_idx), spec.hyperparams);
        const auto t1 = clock::now();
        FoldMetrics fm;
        fm.size = test_idx.size();
        fm.class_counts.assign(present.size(), 0);
        std::size_t correct = 0;
        for (auto i : test_idx) {
            predicted[i] = predict_row(model, compact.row(i), &visits).class_index;
            ++fm.class_counts[static_cast<std::size_t>(compact.y[i])];
            if (predicted[i] == compact.y[i]) ++correct;
        }
        const auto t2 = clock::now();
        fm.accuracy = fm.size ? static_cast<double>(correct) / static_cast<double>(fm.size) : 0.0;
        folds.push_back(std::move(fm));
        train_s += std::chrono::duration<double>(t1 - t0).count();
        infer_s += std::chrono::duration<double>(t2 - t1).count();
    }
    auto metrics = EvalMetrics::from_predictions(present, compact.y, predicted);
    metrics.folds = std::move(folds);
    metrics.train_seconds = train_s;
    metrics.infer_seconds = infer_s;
    metrics.inference_cost = visits;
    return metrics;
}

/// Highest F1-macro wins; ties go to the lower inference cost, then to
/// declaration order. Returns the index of the winner.
inline std::size_t select_model(std::span<const std::pair<ModelSpec, EvalMetrics>> candidates) {
    if (candidates.empty()) throw DataError("no candidate models");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const auto& a = candidates[i].second;
        const auto& b = candidates[best].second;
        if (a.f1_macro > b.f1_macro || (a.f1_macro == b.f1_macro && a.inference_cost < b.inference_cost)) best = i;
    }
    return best;
}

}  // namespace machwatch

#endif  // MACHWATCH_LEARN_VALIDATION_HPP
