#ifndef MACHWATCH_LEARN_TREE_HPP
#define MACHWATCH_LEARN_TREE_HPP

#include "machwatch/error.hpp"
#include "machwatch/learn/features.hpp"
#include "machwatch/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace machwatch {

enum class ModelKind : std::uint8_t { CART, RandomForest, ExtraTrees };

inline constexpr std::array<std::string_view, 3> kModelKindTokens{"CART", "RandomForest", "ExtraTrees"};
inline std::string_view to_string(ModelKind k) { return kModelKindTokens[static_cast<std::size_t>(k)]; }
inline ModelKind parse_model_kind(std::string_view s) {
    for (std::size_t i = 0; i < kModelKindTokens.size(); ++i)
        if (kModelKindTokens[i] == s) return static_cast<ModelKind>(i);
    throw DataError("unknown model kind '" + std::string(s) + "'");
}

struct Hyperparams {
    int max_depth = 12;
    int min_samples_leaf = 1;
    int n_trees = 1;
    int features_per_split = 0;  // 0: every feature for CART, ceil(sqrt(p)) for ensembles
    bool bootstrap = false;
    std::uint64_t seed = 1;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Dense row-major design matrix with integer class targets.
struct TrainingSet {
    std::size_t n_features = 0;
    std::vector<double> x;
    std::vector<int> y;
    std::vector<std::string> classes;

    [[nodiscard]] std::size_t rows() const noexcept { return y.size(); }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return std::span<const double>(x).subspan(i * n_features, n_features);
    }
    void add_row(std::span<const double> features, int label) {
        if (features.size() != n_features) throw DataError("feature row has wrong dimensionality");
        x.insert(x.end(), features.begin(), features.end());
        y.push_back(label);
    }
    /// Rows `idx` in that order, same class list.
    [[nodiscard]] TrainingSet subset(std::span<const std::size_t> idx) const {
        TrainingSet out;
        out.n_features = n_features;
        out.classes = classes;
        out.x.reserve(idx.size() * n_features);
        for (auto i : idx) out.add_row(row(i), y[i]);
        return out;
    }
};

/// Gini impurity 1 - sum p_i^2 of a class-count vector.
inline double gini(std::span<const double> counts) {
    double total = 0;
    for (double c : counts) {
        if (c < 0) throw DataError("gini: negative class count");
        total += c;
    }
    if (!(total > 0)) throw DataError("gini: all class counts are zero");
    double sq = 0;
    for (double c : counts) sq += (c / total) * (c / total);
    return 1.0 - sq;
}

inline double gini(std::initializer_list<double> counts) { return gini(std::span<const double>(counts.begin(), counts.size())); }

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;   // taken when x[feature] <= threshold
    int right = -1;
    std::vector<double> counts;  // class counts of the training rows reaching the node

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Nodes in preorder, root at index 0.
struct DecisionTree {
    std::vector<TreeNode> nodes;

    [[nodiscard]] const TreeNode& leaf_for(std::span<const double> x, std::uint64_t* visits = nullptr) const {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            if (visits) ++*visits;
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                                              : nodes[i].right);
        }
        if (visits) ++*visits;
        return nodes[i];
    }

    [[nodiscard]] std::size_t edge_count() const noexcept { return nodes.empty() ? 0 : nodes.size() - 1; }
    [[nodiscard]] int depth() const { return depth_from(0); }

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    [[nodiscard]] int depth_from(std::size_t i) const {
        if (nodes[i].is_leaf()) return 0;
        return 1 + std::max(depth_from(static_cast<std::size_t>(nodes[i].left)), depth_from(static_cast<std::size_t>(nodes[i].right)));
    }
};

struct TreeModel {
    std::string id;
    ModelKind kind = ModelKind::CART;
    Hyperparams hyperparams;
    std::vector<std::string> classes;
    int feature_schema_version = kFeatureSchemaVersion;
    std::vector<std::string> feature_names;
    std::vector<DecisionTree> trees;

    friend bool operator==(const TreeModel&, const TreeModel&) = default;

    /// Throws DataError on a structurally invalid model.
    void validate() const {
        if (trees.empty()) throw DataError("model has no trees");
        if (classes.size() < 2) throw DataError("model needs at least two classes");
        const auto p = static_cast<int>(feature_names.size());
        for (const auto& t : trees) {
            if (t.nodes.empty()) throw DataError("empty tree");
            const auto n = static_cast<int>(t.nodes.size());
            for (const auto& node : t.nodes) {
                if (node.counts.size() != classes.size()) throw DataError("leaf count vector does not match class set");
                for (double c : node.counts)
                    if (c < 0) throw DataError("negative leaf count");
                if (node.is_leaf()) continue;
                if (node.feature >= p) throw DataError("split references invalid feature index");
                if (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n)
                    throw DataError("split references invalid child");
            }
        }
    }

    /// Self-describing JSON; serialize(deserialize(text)) == text.
    [[nodiscard]] std::string serialize() const {
        nlohmann::json j;
        j["format"] = "machwatch-tree-model";
        j["format_version"] = 1;
        j["id"] = id;
        j["kind"] = std::string(to_string(kind));
        j["classes"] = classes;
        j["feature_schema_version"] = feature_schema_version;
        j["feature_names"] = feature_names;
        j["hyperparams"] = {{"max_depth", hyperparams.max_depth},
                            {"min_samples_leaf", hyperparams.min_samples_leaf},
                            {"n_trees", hyperparams.n_trees},
                            {"features_per_split", hyperparams.features_per_split},
                            {"bootstrap", hyperparams.bootstrap},
                            {"seed", hyperparams.seed}};
        auto& jt = j["trees"] = nlohmann::json::array();
        for (const auto& t : trees) {
            auto nodes = nlohmann::json::array();
            for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.counts});
            jt.push_back(std::move(nodes));
        }
        return j.dump() + "\n";
    }

    static TreeModel deserialize(std::string_view body) {
        try {
            const auto j = nlohmann::json::parse(body);
            if (j.at("format") != "machwatch-tree-model") throw DataError("not a tree model");
            if (j.at("format_version") != 1) throw DataError("unsupported model format version");
            TreeModel m;
            m.id = j.at("id").get<std::string>();
            m.kind = parse_model_kind(j.at("kind").get<std::string>());
            m.classes = j.at("classes").get<std::vector<std::string>>();
            m.feature_schema_version = j.at("feature_schema_version").get<int>();
            m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
            const auto& h = j.at("hyperparams");
            m.hyperparams.max_depth = h.at("max_depth").get<int>();
            m.hyperparams.min_samples_leaf = h.at("min_samples_leaf").get<int>();
            m.hyperparams.n_trees = h.at("n_trees").get<int>();
            m.hyperparams.features_per_split = h.at("features_per_split").get<int>();
            m.hyperparams.bootstrap = h.at("bootstrap").get<bool>();
            m.hyperparams.seed = h.at("seed").get<std::uint64_t>();
            for (const auto& jt : j.at("trees")) {
                DecisionTree t;
                for (const auto& jn : jt)
                    t.nodes.push_back({jn.at(0).get<int>(), jn.at(1).get<double>(), jn.at(2).get<int>(), jn.at(3).get<int>(),
                                       jn.at(4).get<std::vector<double>>()});
                m.trees.push_back(std::move(t));
            }
            m.validate();
            return m;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("malformed model: ") + e.what());
        }
    }
};

namespace tree_detail {

/// Grows one tree. Random draws come from the tree's own stream in a fixed
/// order: bootstrap multiplicities first (n draws), then, node by node in
/// preorder, feature sampling (partial Fisher-Yates, one draw per sampled
/// feature) followed by extra-trees thresholds (one draw per non-constant
/// sampled feature).
class Grower {
public:
    Grower(const TrainingSet& data, const Hyperparams& hp, ModelKind kind, std::size_t features_per_split, std::uint64_t stream)
        : data_(data), hp_(hp), kind_(kind), k_(features_per_split), rng_(hp.seed, stream), n_classes_(data.classes.size()) {}

    DecisionTree grow(bool bootstrap) {
        const std::size_t n = data_.rows();
        weight_.assign(n, bootstrap ? 0u : 1u);
        if (bootstrap)
            for (std::size_t i = 0; i < n; ++i) ++weight_[rng_.index(n)];
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (weight_[i] > 0) idx.push_back(i);
        tree_ = {};
        build(idx, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0;
        double impurity = 0;
    };

    std::vector<double> class_counts(const std::vector<std::size_t>& idx) const {
        std::vector<double> c(n_classes_, 0.0);
        for (auto i : idx) c[static_cast<std::size_t>(data_.y[i])] += weight_[i];
        return c;
    }

    static double weighted_gini(const std::vector<double>& counts, double total) {
        if (total <= 0) return 0;
        double sq = 0;
        for (double c : counts) sq += c * c;
        return total - sq / total;  // == total * gini
    }

    std::vector<std::size_t> candidate_features() {
        const std::size_t p = data_.n_features;
        std::vector<std::size_t> f(p);
        std::iota(f.begin(), f.end(), std::size_t{0});
        if (k_ >= p) return f;
        for (std::size_t i = 0; i < k_; ++i) std::swap(f[i], f[i + rng_.index(p - i)]);
        f.resize(k_);
        std::sort(f.begin(), f.end());
        return f;
    }

    void consider(Split& best, bool& found, int feature, double threshold, double impurity) const {
        if (!found || impurity < best.impurity - 1e-12) {
            best = {feature, threshold, impurity};
            found = true;
        }
    }

    bool best_split(const std::vector<std::size_t>& idx, double total, Split& best) {
        const auto min_leaf = static_cast<double>(hp_.min_samples_leaf);
        bool found = false;
        std::vector<std::pair<double, std::size_t>> vals(idx.size());
        std::vector<double> left(n_classes_), right(n_classes_);
        const auto parent = class_counts(idx);
        for (auto f : candidate_features()) {
            for (std::size_t k = 0; k < idx.size(); ++k) vals[k] = {data_.x[idx[k] * data_.n_features + f], idx[k]};
            if (kind_ == ModelKind::ExtraTrees) {
                double lo = vals[0].first, hi = vals[0].first;
                for (const auto& v : vals) {
                    lo = std::min(lo, v.first);
                    hi = std::max(hi, v.first);
                }
                if (!(lo < hi)) continue;
                const double thr = rng_.uniform(lo, hi);
                std::fill(left.begin(), left.end(), 0.0);
                double n_left = 0;
                for (const auto& v : vals)
                    if (v.first <= thr) {
                        left[static_cast<std::size_t>(data_.y[v.second])] += weight_[v.second];
                        n_left += weight_[v.second];
                    }
                const double n_right = total - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                for (std::size_t c = 0; c < n_classes_; ++c) right[c] = parent[c] - left[c];
                consider(best, found, static_cast<int>(f), thr, (weighted_gini(left, n_left) + weighted_gini(right, n_right)) / total);
                continue;
            }
            std::sort(vals.begin(), vals.end());
            std::fill(left.begin(), left.end(), 0.0);
            double n_left = 0;
            for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                const auto row = vals[k].second;
                left[static_cast<std::size_t>(data_.y[row])] += weight_[row];
                n_left += weight_[row];
                if (!(vals[k].first < vals[k + 1].first)) continue;
                const double n_right = total - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                for (std::size_t c = 0; c < n_classes_; ++c) right[c] = parent[c] - left[c];
                double thr = 0.5 * (vals[k].first + vals[k + 1].first);
                if (!(thr < vals[k + 1].first)) thr = vals[k].first;
                consider(best, found, static_cast<int>(f), thr, (weighted_gini(left, n_left) + weighted_gini(right, n_right)) / total);
            }
        }
        return found;
    }

    int build(const std::vector<std::size_t>& idx, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});
        auto counts = class_counts(idx);
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        const auto nonzero = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; });
        tree_.nodes[static_cast<std::size_t>(id)].counts = counts;

        if (nonzero <= 1 || depth >= hp_.max_depth || total < 2.0 * hp_.min_samples_leaf) return id;
        Split split;
        if (!best_split(idx, total, split)) return id;

        std::vector<std::size_t> l, r;
        for (auto i : idx) (data_.x[i * data_.n_features + static_cast<std::size_t>(split.feature)] <= split.threshold ? l : r).push_back(i);
        const int left = build(l, depth + 1);
        const int right = build(r, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    const TrainingSet& data_;
    const Hyperparams& hp_;
    ModelKind kind_;
    std::size_t k_;
    CounterRng rng_;
    std::size_t n_classes_;
    std::vector<std::uint32_t> weight_;
    DecisionTree tree_;
};

inline void check_trainable(const TrainingSet& data, const Hyperparams& hp) {
    if (data.n_features == 0) throw DataError("training set has no features");
    if (hp.max_depth < 1) throw DataError("max_depth must be >= 1");
    if (hp.min_samples_leaf < 1) throw DataError("min_samples_leaf must be >= 1");
    if (hp.n_trees < 1) throw DataError("n_trees must be >= 1");
    std::vector<char> present(data.classes.size(), 0);
    for (int y : data.y) {
        if (y < 0 || static_cast<std::size_t>(y) >= data.classes.size()) throw DataError("label outside class set");
        present[static_cast<std::size_t>(y)] = 1;
    }
    if (std::count(present.begin(), present.end(), 1) < 2) throw DataError("training needs at least two classes present");
    if (data.rows() < 2 * static_cast<std::size_t>(hp.min_samples_leaf))
        throw DataError("training needs at least 2 * min_samples_leaf rows");
}

inline TreeModel make_model(const TrainingSet& data, ModelKind kind, Hyperparams hp) {
    TreeModel m;
    m.kind = kind;
    m.hyperparams = hp;
    m.classes = data.classes;
    m.feature_names = data.n_features == feature_count() ? feature_names() : std::vector<std::string>{};
    if (m.feature_names.empty())
        for (std::size_t f = 0; f < data.n_features; ++f) m.feature_names.push_back("f" + std::to_string(f));
    m.id = std::string(to_string(kind)) + "-s" + std::to_string(hp.seed);
    return m;
}

inline std::size_t ensemble_features(const TrainingSet& data, const Hyperparams& hp) {
    if (hp.features_per_split > 0) return std::min<std::size_t>(static_cast<std::size_t>(hp.features_per_split), data.n_features);
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.n_features))));
}

}  // namespace tree_detail

/// Single CART tree over every feature.
inline TreeModel train_cart(const TrainingSet& data, Hyperparams hp) {
    tree_detail::check_trainable(data, hp);
    hp.n_trees = 1;
    hp.bootstrap = false;
    hp.features_per_split = 0;
    auto m = tree_detail::make_model(data, ModelKind::CART, hp);
    m.trees.push_back(tree_detail::Grower(data, m.hyperparams, ModelKind::CART, data.n_features, 0).grow(false));
    return m;
}

/// Random forest: each tree grown on its own bootstrap resample (when
/// enabled) with per-node feature sampling. Tree t draws from stream t.
inline TreeModel train_forest(const TrainingSet& data, Hyperparams hp) {
    tree_detail::check_trainable(data, hp);
    auto m = tree_detail::make_model(data, ModelKind::RandomForest, hp);
    const auto k = tree_detail::ensemble_features(data, hp);
    for (int t = 0; t < hp.n_trees; ++t)
        m.trees.push_back(tree_detail::Grower(data, m.hyperparams, ModelKind::RandomForest, k, static_cast<std::uint64_t>(t))
                              .grow(hp.bootstrap));
    return m;
}

/// Extremely randomized trees: no bootstrap, one uniform threshold per
/// sampled feature, best of those by Gini.
inline TreeModel train_extra_trees(const TrainingSet& data, Hyperparams hp) {
    tree_detail::check_trainable(data, hp);
    hp.bootstrap = false;
    auto m = tree_detail::make_model(data, ModelKind::ExtraTrees, hp);
    const auto k = tree_detail::ensemble_features(data, hp);
    for (int t = 0; t < hp.n_trees; ++t)
        m.trees.push_back(
            tree_detail::Grower(data, m.hyperparams, ModelKind::ExtraTrees, k, static_cast<std::uint64_t>(t)).grow(false));
    return m;
}

inline TreeModel train_model(ModelKind kind, const TrainingSet& data, const Hyperparams& hp) {
    switch (kind) {
    case ModelKind::CART: return train_cart(data, hp);
    case ModelKind::RandomForest: return train_forest(data, hp);
    case ModelKind::ExtraTrees: return train_extra_trees(data, hp);
    }
    throw DataError("unknown model kind");
}

struct RowPrediction {
    int class_index = 0;
    double confidence = 0;

    friend bool operator==(const RowPrediction&, const RowPrediction&) = default;
};

/// Single tree: argmax of the leaf posterior, confidence = that posterior.
/// Ensembles: hard majority vote, confidence = winning vote fraction. Ties
/// go to the lowest class index. `visits` accumulates nodes traversed.
inline RowPrediction predict_row(const TreeModel& m, std::span<const double> x, std::uint64_t* visits = nullptr) {
    if (x.size() != m.feature_names.size()) throw DataError("feature vector dimensionality does not match model");
    const std::size_t k = m.classes.size();
    auto argmax = [](const std::vector<double>& v) {
        return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());  // first maximum
    };
    if (m.kind == ModelKind::CART) {
        const auto& leaf = m.trees.front().leaf_for(x, visits);
        const double total = std::accumulate(leaf.counts.begin(), leaf.counts.end(), 0.0);
        const int c = argmax(leaf.counts);
        return {c, leaf.counts[static_cast<std::size_t>(c)] / total};
    }
    std::vector<double> votes(k, 0.0);
    for (const auto& t : m.trees) votes[static_cast<std::size_t>(argmax(t.leaf_for(x, visits).counts))] += 1;
    const int c = argmax(votes);
    return {c, votes[static_cast<std::size_t>(c)] / static_cast<double>(m.trees.size())};
}

}  // namespace machwatch

#endif  // MACHWATCH_LEARN_TREE_HPP
