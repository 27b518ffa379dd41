#ifndef MACHWATCH_RISK_MATRIX_HPP
#define MACHWATCH_RISK_MATRIX_HPP

#include "machwatch/criteria/evaluate.hpp"
#include "machwatch/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bitset>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace machwatch {

/// Causes in matrix column order. R1-R8 are machine-side faults, R9-R10
/// cyber incidents.
enum class RiskId : std::uint8_t {
    SpindleMotorSeizure,
    WiringComponentFault,
    ClampBreakage,
    SymmetricPartDefect,
    LinearAxisFault,
    CncProgramFault,
    SensorFault,
    ElectricalInstallationFault,
    CyberCncTampering,
    CyberPlcDos,
};

inline constexpr std::size_t kRiskCount = 10;

inline constexpr std::array<std::string_view, kRiskCount> kRiskNames{
    "SpindleMotorSeizure", "WiringComponentFault",        "ClampBreakage",     "SymmetricPartDefect", "LinearAxisFault",
    "CncProgramFault",     "SensorFault",                 "ElectricalInstallationFault", "CyberCncTampering", "CyberPlcDos"};

inline constexpr std::size_t ordinal(RiskId r) noexcept { return static_cast<std::size_t>(r); }
inline RiskId risk_at(std::size_t i) { return static_cast<RiskId>(i); }

/// "R1".."R10".
inline std::string risk_code(RiskId r) { return "R" + std::to_string(ordinal(r) + 1); }
inline std::string_view risk_name(RiskId r) { return kRiskNames[ordinal(r)]; }

inline RiskId parse_risk(std::string_view s) {
    s = text::trim(s);
    for (std::size_t i = 0; i < kRiskCount; ++i)
        if (s == risk_code(risk_at(i)) || s == kRiskNames[i]) return risk_at(i);
    throw DataError("unknown risk '" + std::string(s) + "'");
}

enum class RiskCategory : std::uint8_t { MachineFault, CyberIncident };

inline RiskCategory category(RiskId r) noexcept {
    return r == RiskId::CyberCncTampering || r == RiskId::CyberPlcDos ? RiskCategory::CyberIncident : RiskCategory::MachineFault;
}

/// Boolean incidence of criteria (rows) on risks (columns).
class RiskMatrix {
public:
    [[nodiscard]] bool at(CriterionId c, RiskId r) const { return rows_[ordinal(c)].test(ordinal(r)); }
    void set(CriterionId c, RiskId r, bool v = true) { rows_[ordinal(c)].set(ordinal(r), v); }

    [[nodiscard]] std::vector<RiskId> row(CriterionId c) const {
        std::vector<RiskId> out;
        for (std::size_t r = 0; r < kRiskCount; ++r)
            if (rows_[ordinal(c)].test(r)) out.push_back(risk_at(r));
        return out;
    }

    friend bool operator==(const RiskMatrix&, const RiskMatrix&) = default;

private:
    std::array<std::bitset<kRiskCount>, kCriterionCount> rows_{};
};

/// Expert cause/risk incidence table shipped as the default configuration.
inline RiskMatrix default_matrix() {
    using C = CriterionId;
    constexpr int table[kCriterionCount][5] = {
        {1, 2, 4, 10, 0},   // TempGradient
        {3, 4, 5, 0, 0},    // CurrentPeakCount
        {1, 2, 3, 5, 0},    // CurrentWithoutVibration
        {7, 0, 0, 0, 0},    // VibrationWithoutCurrent_C
        {3, 4, 5, 6, 10},   // ExcessVibration
        {5, 6, 0, 0, 0},    // VibrationWithoutCurrent_V
        {1, 5, 8, 10, 0},   // SpindleRpmRise
        {10, 0, 0, 0, 0},   // OutOfHoursUse
        {6, 9, 0, 0, 0},    // ZeroDrop
        {2, 0, 0, 0, 0},    // CurrentIntensityChange
    };
    RiskMatrix m;
    for (std::size_t c = 0; c < kCriterionCount; ++c)
        for (int r : table[c])
            if (r > 0) m.set(static_cast<C>(c), risk_at(static_cast<std::size_t>(r - 1)));
    return m;
}

/// `Criterion: R#,R#,...` per line; `#` comments. Every criterion must
/// appear exactly once with at least one risk.
inline RiskMatrix load_matrix(std::string_view body) {
    RiskMatrix m;
    std::array<bool, kCriterionCount> seen{};
    std::size_t line_no = 0;
    for (auto raw : text::split(body, '\n')) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) throw DataError("matrix line " + std::to_string(line_no) + ": expected 'criterion: R#,...'");
        const auto crit = parse_criterion(text::trim(line.substr(0, colon)));
        if (seen[ordinal(crit)]) throw DataError("matrix row for " + std::string(to_string(crit)) + " given twice");
        seen[ordinal(crit)] = true;
        const auto risks = text::trim(line.substr(colon + 1));
        if (risks.empty()) throw DataError("matrix row for " + std::string(to_string(crit)) + " has no risks");
        for (auto tok : text::split(risks, ',')) m.set(crit, parse_risk(tok));
    }
    for (auto c : kAllCriteria)
        if (!seen[ordinal(c)]) throw DataError("matrix is missing the row for " + std::string(to_string(c)));
    return m;
}

/// Commented incidence grid followed by the loadable row lines.
inline std::string render_matrix(const RiskMatrix& m) {
    std::ostringstream out;
    out << "# Cause/risk incidence matrix\n#\n";
    for (std::size_t r = 0; r < kRiskCount; ++r)
        out << "#   " << risk_code(risk_at(r)) << (r < 9 ? "  " : " ") << kRiskNames[r]
            << (category(risk_at(r)) == RiskCategory::CyberIncident ? "  (cyber incident)" : "  (machine fault)") << '\n';
    out << "#\n# " << std::string(26, ' ');
    for (std::size_t r = 0; r < kRiskCount; ++r) {
        const auto code = risk_code(risk_at(r));
        out << code << std::string(4 - code.size(), ' ');
    }
    out << '\n';
    for (auto c : kAllCriteria) {
        const auto name = std::string(to_string(c));
        out << "# " << name << std::string(26 - name.size(), ' ');
        for (std::size_t r = 0; r < kRiskCount; ++r) out << (m.at(c, risk_at(r)) ? "x   " : ".   ");
        out << '\n';
    }
    out << "#\n";
    for (auto c : kAllCriteria) {
        std::vector<std::string> codes;
        for (auto r : m.row(c)) codes.push_back(risk_code(r));
        out << to_string(c) << ": " << text::join(codes, ",") << '\n';
    }
    return out.str();
}

enum class Origin : std::uint8_t { MachineFault, CyberIncident, Mixed, Unknown };
inline constexpr std::array<std::string_view, 4> kOriginTokens{"MachineFault", "CyberIncident", "Mixed", "Unknown"};
inline std::string_view to_string(Origin o) { return kOriginTokens[static_cast<std::size_t>(o)]; }

struct RankedRisk {
    RiskId risk{};
    std::size_t support = 0;  // fired criteria incident to the risk
    double mean_score = 0;    // mean score of those firings

    friend bool operator==(const RankedRisk&, const RankedRisk&) = default;
};

struct RiskAssessment {
    Interval window;
    std::vector<RankedRisk> ranking;  // support desc, mean score desc, ordinal asc
    Origin origin = Origin::Unknown;

    [[nodiscard]] bool includes(RiskId r) const {
        return std::any_of(ranking.begin(), ranking.end(), [r](const RankedRisk& x) { return x.risk == r; });
    }

    friend bool operator==(const RiskAssessment&, const RiskAssessment&) = default;
};

inline RiskAssessment attribute(const FiringSet& firings, const RiskMatrix& m, Interval window = {}) {
    RiskAssessment a;
    a.window = window;
    if (firings.empty()) return a;
    std::array<std::size_t, kRiskCount> support{};
    std::array<double, kRiskCount> score_sum{};
    for (const auto& f : firings.firings)
        for (auto r : m.row(f.criterion)) {
            ++support[ordinal(r)];
            score_sum[ordinal(r)] += f.score;
        }
    bool machine = false, cyber = false;
    for (std::size_t r = 0; r < kRiskCount; ++r) {
        if (support[r] == 0) continue;
        a.ranking.push_back({risk_at(r), support[r], score_sum[r] / static_cast<double>(support[r])});
        (category(risk_at(r)) == RiskCategory::CyberIncident ? cyber : machine) = true;
    }
    std::stable_sort(a.ranking.begin(), a.ranking.end(), [](const RankedRisk& x, const RankedRisk& y) {
        if (x.support != y.support) return x.support > y.support;
        if (x.mean_score != y.mean_score) return x.mean_score > y.mean_score;
        return ordinal(x.risk) < ordinal(y.risk);
    });
    a.origin = machine && cyber ? Origin::Mixed : cyber ? Origin::CyberIncident : Origin::MachineFault;
    return a;
}

inline nlohmann::json to_json(const RiskAssessment& a) {
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& r : a.ranking)
        ranking.push_back({{"risk", risk_code(r.risk)}, {"name", std::string(risk_name(r.risk))}, {"support", r.support},
                           {"mean_score", r.mean_score}});
    return {{"window_start", a.window.start}, {"window_end", a.window.end}, {"origin", std::string(to_string(a.origin))},
            {"ranking", ranking}};
}

}  // namespace machwatch

#endif  // MACHWATCH_RISK_MATRIX_HPP
