#ifndef MACHWATCH_LABELING_LABELING_HPP
#define MACHWATCH_LABELING_LABELING_HPP

#include "machwatch/criteria/evaluate.hpp"
#include "machwatch/labeling/taxonomy.hpp"
#include "machwatch/text.hpp"

#include <algorithm>
#include <array>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace machwatch {

enum class BinaryLabel : std::uint8_t { Normal, Anomalous };
enum class Provenance : std::uint8_t { ExpertAnnotated, CriteriaDerived, SimulatorGroundTruth };

inline constexpr std::array<std::string_view, 2> kBinaryTokens{"Normal", "Anomalous"};
inline constexpr std::array<std::string_view, 3> kProvenanceTokens{"ExpertAnnotated", "CriteriaDerived", "SimulatorGroundTruth"};

inline std::string_view to_string(BinaryLabel v) { return kBinaryTokens[static_cast<std::size_t>(v)]; }
inline std::string_view to_string(Provenance v) { return kProvenanceTokens[static_cast<std::size_t>(v)]; }

struct LabeledWindow {
    Window window;
    BinaryLabel binary_label = BinaryLabel::Normal;
    int class_label = Taxonomy::kNormal;
    Provenance provenance = Provenance::CriteriaDerived;
    FiringSet firings;
};

struct LabeledDataset {
    std::vector<LabeledWindow> rows;
    int window_duration_s = 0;
    Taxonomy taxonomy;
    /// Windows an expert marked anomalous although no criterion fired; they
    /// carry no derivable class and are left out of `rows`.
    std::size_t dropped_unclassifiable = 0;

    [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }

    /// UTC day of each row, used as a split hint.
    [[nodiscard]] std::string day_of(std::size_t i) const { return civil::day_string(rows.at(i).window.interval().start); }

    [[nodiscard]] std::size_t distinct_classes() const {
        std::vector<int> seen;
        for (const auto& r : rows)
            if (std::find(seen.begin(), seen.end(), r.class_label) == seen.end()) seen.push_back(r.class_label);
        return seen.size();
    }
};

/// A window is annotated iff its interval intersects at least one annotation.
inline std::pair<std::vector<Window>, std::vector<Window>> split_by_annotation(std::span<const Window> windows,
                                                                              std::span<const Annotation> annotations) {
    std::pair<std::vector<Window>, std::vector<Window>> out;
    for (const auto& w : windows) {
        const bool hit = std::any_of(annotations.begin(), annotations.end(),
                                     [&](const Annotation& a) { return a.interval.intersects(w.interval()); });
        (hit ? out.first : out.second).push_back(w);
    }
    return out;
}

/// Class of the highest-score firing; ties go to the lowest criterion ordinal.
inline int dominant_class(const FiringSet& fs, const Taxonomy& taxonomy) {
    if (fs.empty()) return Taxonomy::kNormal;
    const CriterionFiring* best = nullptr;
    for (const auto& f : fs.firings)
        if (!best || f.score > best->score || (f.score == best->score && ordinal(f.criterion) < ordinal(best->criterion)))
            best = &f;
    return taxonomy.class_of(best->criterion);
}

/// Label windows from precomputed firing sets (one per window).
///
/// Expert annotations carrying an incident class take precedence: Benign
/// forces Normal; MachineFault or CyberIncident over a window where nothing
/// fired cannot be assigned a class and the window is dropped.
inline LabeledDataset label_windows(std::span<const Window> windows, std::span<const FiringSet> firings,
                                    const Taxonomy& taxonomy, std::span<const Annotation> annotations = {}) {
    if (windows.size() != firings.size()) throw DataError("one firing set per window required");
    LabeledDataset ds;
    ds.taxonomy = taxonomy;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto& w = windows[i];
        if (ds.window_duration_s == 0) ds.window_duration_s = w.duration_s();
        if (w.duration_s() != ds.window_duration_s) throw DataError("labeled dataset needs a homogeneous window duration");

        LabeledWindow row{w, BinaryLabel::Normal, Taxonomy::kNormal, Provenance::CriteriaDerived, firings[i]};
        if (!row.firings.empty()) {
            row.binary_label = BinaryLabel::Anomalous;
            row.class_label = dominant_class(row.firings, taxonomy);
        }

        std::optional<IncidentClass> expert;
        for (const auto& a : annotations)
            if (a.incident_class && *a.incident_class != IncidentClass::Unspecified && a.interval.intersects(w.interval())) {
                // Benign loses to any anomalous verdict on the same window.
                if (!expert || *expert == IncidentClass::Benign) expert = a.incident_class;
            }
        if (expert) {
            const bool expert_anomalous = *expert != IncidentClass::Benign;
            if (!expert_anomalous && row.binary_label == BinaryLabel::Anomalous) {
                row.binary_label = BinaryLabel::Normal;
                row.class_label = Taxonomy::kNormal;
                row.provenance = Provenance::ExpertAnnotated;
            } else if (expert_anomalous && row.binary_label == BinaryLabel::Normal) {
                ++ds.dropped_unclassifiable;
                continue;
            } else {
                row.provenance = Provenance::ExpertAnnotated;
            }
        }
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

/// Evaluate the criteria on each annotated window and label it.
inline LabeledDataset derive_labels(std::span<const Window> annotated, const CriteriaConfig& cfg, const Taxonomy& taxonomy,
                                    const QuantileStore& history, std::span<const Annotation> annotations = {}) {
    std::vector<FiringSet> fs;
    fs.reserve(annotated.size());
    for (const auto& w : annotated) fs.push_back(evaluate_all(w, cfg, history));
    return label_windows(annotated, fs, taxonomy, annotations);
}

inline constexpr std::string_view kLabeledHeader = "window_start,window_end,binary_label,class_label,provenance,criteria_fired";

inline std::string criteria_field(const FiringSet& fs) {
    std::vector<std::string> toks;
    for (const auto& f : fs.firings) toks.emplace_back(to_string(f.criterion));
    return text::join(toks, ";");
}

inline void write_labeled_csv(std::ostream& out, const LabeledDataset& ds) {
    out << kLabeledHeader << '\n';
    for (const auto& r : ds.rows)
        out << r.window.interval().start << ',' << r.window.interval().end << ',' << to_string(r.binary_label) << ','
            << ds.taxonomy.name(r.class_label) << ',' << to_string(r.provenance) << ',' << criteria_field(r.firings) << '\n';
}

}  // namespace machwatch

#endif  // MACHWATCH_LABELING_LABELING_HPP
