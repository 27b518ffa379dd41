#ifndef MACHWATCH_LEARN_METRICS_HPP
#define MACHWATCH_LEARN_METRICS_HPP

#include "machwatch/error.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace machwatch {

struct FoldMetrics {
    std::size_t size = 0;
    std::vector<std::size_t> class_counts;  // test rows per class in this fold
    double accuracy = 0;
};

struct EvalMetrics {
    std::vector<std::string> classes;
    std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
    std::vector<std::size_t> support;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    double f1_macro = 0;
    double accuracy = 0;
    double micro_recall = 0;
    std::vector<FoldMetrics> folds;
    double train_seconds = 0;
    double infer_seconds = 0;
    /// Tree nodes traversed during evaluation; the deterministic measure of
    /// inference cost used for model selection.
    std::uint64_t inference_cost = 0;

    [[nodiscard]] std::size_t total() const {
        std::size_t t = 0;
        for (const auto& row : confusion)
            for (auto c : row) t += c;
        return t;
    }

    /// Derive every per-class figure from a square confusion matrix.
    /// Precision or recall with a zero denominator is 0, and so is F1 when
    /// both are 0; zero-support classes therefore pull the macro mean down.
    static EvalMetrics from_confusion(std::vector<std::string> classes, std::vector<std::vector<std::size_t>> confusion) {
        const std::size_t k = classes.size();
        if (confusion.size() != k) throw DataError("confusion matrix does not match class count");
        for (const auto& row : confusion)
            if (row.size() != k) throw DataError("confusion matrix must be square");
        EvalMetrics m;
        m.classes = std::move(classes);
        m.confusion = std::move(confusion);
        m.support.assign(k, 0);
        m.precision.assign(k, 0);
        m.recall.assign(k, 0);
        m.f1.assign(k, 0);
        std::vector<std::size_t> predicted(k, 0);
        std::size_t correct = 0, total = 0;
        for (std::size_t t = 0; t < k; ++t)
            for (std::size_t p = 0; p < k; ++p) {
                m.support[t] += m.confusion[t][p];
                predicted[p] += m.confusion[t][p];
                total += m.confusion[t][p];
                if (t == p) correct += m.confusion[t][p];
            }
        double f1_sum = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double tp = static_cast<double>(m.confusion[c][c]);
            m.precision[c] = predicted[c] ? tp / static_cast<double>(predicted[c]) : 0.0;
            m.recall[c] = m.support[c] ? tp / static_cast<double>(m.support[c]) : 0.0;
            const double pr = m.precision[c] + m.recall[c];
            m.f1[c] = pr > 0 ? 2.0 * m.precision[c] * m.recall[c] / pr : 0.0;
            f1_sum += m.f1[c];
        }
        m.f1_macro = k ? f1_sum / static_cast<double>(k) : 0.0;
        m.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
        // Micro-averaged recall pools true positives over pooled support.
        std::size_t pooled_tp = 0, pooled_support = 0;
        for (std::size_t c = 0; c < k; ++c) {
            pooled_tp += m.confusion[c][c];
            pooled_support += m.support[c];
        }
        m.micro_recall = pooled_support ? static_cast<double>(pooled_tp) / static_cast<double>(pooled_support) : 0.0;
        return m;
    }

    static EvalMetrics from_predictions(std::vector<std::string> classes, std::span<const int> truth, std::span<const int> predicted) {
        if (truth.size() != predicted.size()) throw DataError("truth and prediction lengths differ");
        const std::size_t k = classes.size();
        std::vector<std::vector<std::size_t>> cm(k, std::vector<std::size_t>(k, 0));
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= k || static_cast<std::size_t>(predicted[i]) >= k)
                throw DataError("label outside class set");
            ++cm[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
        }
        return from_confusion(std::move(classes), std::move(cm));
    }

    /// JSON without wall-clock figures, so equal evaluations serialize equally.
    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json folds_json = nlohmann::json::array();
        for (const auto& f : folds) folds_json.push_back({{"size", f.size}, {"class_counts", f.class_counts}, {"accuracy", f.accuracy}});
        return {{"classes", classes},       {"confusion", confusion}, {"support", support},   {"precision", precision},
                {"recall", recall},         {"f1", f1},               {"f1_macro", f1_macro}, {"accuracy", accuracy},
                {"micro_recall", micro_recall}, {"folds", folds_json}, {"inference_cost", inference_cost}};
    }
};

}  // namespace machwatch

#endif  // MACHWATCH_LEARN_METRICS_HPP
