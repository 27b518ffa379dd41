#ifndef MACHWATCH_LEARN_EXPORT_HPP
#define MACHWATCH_LEARN_EXPORT_HPP

#include "machwatch/criteria/criterion.hpp"
#include "machwatch/learn/tree.hpp"
#include "machwatch/text.hpp"
#include "machwatch/timeseries/types.hpp"

#include <istream>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace machwatch {

/// Graphviz rendering of one tree. Splits read `feature <= threshold`,
/// leaves show the majority class and the class counts. Splits on a
/// per-phase or mean current maximum carry a `max-current` tag.
inline std::string export_tree_dot(const TreeModel& m, std::size_t tree_index) {
    if (tree_index >= m.trees.size())
        throw DataError("tree index " + std::to_string(tree_index) + " out of range (model has " + std::to_string(m.trees.size()) +
                        " trees)");
    static const std::regex max_current(R"(^i_(r|s|t|mean)_max$)");
    const auto& tree = m.trees[tree_index];
    std::ostringstream out;
    out << "digraph tree_" << tree_index << " {\n";
    out << "  node [shape=box, fontname=\"Helvetica\"];\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        out << "  n" << i << " [label=\"";
        if (n.is_leaf()) {
            const auto best = std::max_element(n.counts.begin(), n.counts.end()) - n.counts.begin();
            out << m.classes[static_cast<std::size_t>(best)] << "\\n";
            for (std::size_t c = 0; c < n.counts.size(); ++c)
                out << (c ? ", " : "") << m.classes[c] << "=" << text::format_double(n.counts[c]);
            out << "\", style=rounded];\n";
        } else {
            const auto& name = m.feature_names[static_cast<std::size_t>(n.feature)];
            out << name << " <= " << text::format_fixed(n.threshold, 3);
            if (std::regex_match(name, max_current)) out << "\\nmax-current\", color=green, penwidth=2, class=\"max-current";
            out << "\"];\n";
        }
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        if (n.is_leaf()) continue;
        out << "  n" << i << " -> n" << n.left << " [label=\"yes\"];\n";
        out << "  n" << i << " -> n" << n.right << " [label=\"no\"];\n";
    }
    out << "}\n";
    return out.str();
}

inline constexpr std::string_view kDetectionsHeader =
    "window_start,window_end,duration_s,predicted_class,confidence,criteria_fired,model_id";

struct Detection {
    Interval window;
    int duration_s = 0;
    std::string predicted_class;
    double confidence = 0;
    std::vector<CriterionId> criteria_fired;
    std::string model_id;

    friend bool operator==(const Detection&, const Detection&) = default;
};

inline void write_detections_csv(std::ostream& out, std::span<const Detection> rows) {
    out << kDetectionsHeader << '\n';
    for (const auto& d : rows) {
        std::vector<std::string> crit;
        for (auto c : d.criteria_fired) crit.emplace_back(to_string(c));
        out << d.window.start << ',' << d.window.end << ',' << d.duration_s << ',' << d.predicted_class << ','
            << text::format_double(d.confidence) << ',' << text::join(crit, ";") << ',' << d.model_id << '\n';
    }
}

inline std::string detections_csv(std::span<const Detection> rows) {
    std::ostringstream out;
    write_detections_csv(out, rows);
    return out.str();
}

inline std::vector<Detection> parse_detections_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != kDetectionsHeader) throw DataError("malformed detections header");
    std::vector<Detection> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = text::split(line, ',');
        if (f.size() != 7) throw DataError("detections line " + std::to_string(line_no) + ": expected 7 fields");
        Detection d;
        d.window = {text::parse_int(f[0]), text::parse_int(f[1])};
        d.duration_s = static_cast<int>(text::parse_int(f[2]));
        d.predicted_class = std::string(f[3]);
        d.confidence = text::parse_double(f[4]);
        if (!f[5].empty())
            for (auto tok : text::split(f[5], ';')) d.criteria_fired.push_back(parse_criterion(tok));
        d.model_id = std::string(f[6]);
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace machwatch

#endif  // MACHWATCH_LEARN_EXPORT_HPP
