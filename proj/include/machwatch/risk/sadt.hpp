#ifndef MACHWATCH_RISK_SADT_HPP
#define MACHWATCH_RISK_SADT_HPP

#include "machwatch/criteria/evaluate.hpp"
#include "machwatch/text.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace machwatch {

/// Box-and-arrow activity: inputs are transformed into outputs under
/// controls, performed by mechanisms.
struct SadtActivity {
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<std::string> controls;
    std::vector<std::string> mechanisms;

    friend bool operator==(const SadtActivity&, const SadtActivity&) = default;
};

/// Activities plus optionally declared external resources. When any
/// resource is declared, every control and mechanism must be either a
/// declared resource or some activity's output.
struct SadtGraph {
    std::vector<SadtActivity> activities;
    std::vector<std::string> resources;

    /// Line format:
    ///
    ///     resource <name>
    ///     activity <name>
    ///     in <flow> | out <flow> | ctl <flow> | mech <flow>
    ///
    /// Flow lines attach to the most recent activity. `#` starts a comment.
    static SadtGraph parse(std::string_view body) {
        SadtGraph g;
        std::size_t line_no = 0;
        for (auto raw : text::split(body, '\n')) {
            ++line_no;
            const auto line = text::trim(raw);
            if (line.empty() || line.front() == '#') continue;
            const auto sp = line.find(' ');
            const auto kw = line.substr(0, sp);
            const auto arg = sp == std::string_view::npos ? std::string_view{} : text::trim(line.substr(sp + 1));
            if (kw == "activity") {
                g.activities.push_back({std::string(arg), {}, {}, {}, {}});
                continue;
            }
            if (kw == "resource") {
                g.resources.emplace_back(arg);
                continue;
            }
            if (g.activities.empty()) throw DataError("sadt line " + std::to_string(line_no) + ": flow before any activity");
            auto& a = g.activities.back();
            if (kw == "in") a.inputs.emplace_back(arg);
            else if (kw == "out") a.outputs.emplace_back(arg);
            else if (kw == "ctl") a.controls.emplace_back(arg);
            else if (kw == "mech") a.mechanisms.emplace_back(arg);
            else throw DataError("sadt line " + std::to_string(line_no) + ": unknown keyword '" + std::string(kw) + "'");
        }
        return g;
    }

    [[nodiscard]] std::string render() const {
        std::ostringstream out;
        for (const auto& r : resources) out << "resource " << r << '\n';
        for (const auto& a : activities) {
            out << "activity " << a.name << '\n';
            for (const auto& f : a.inputs) out << "in " << f << '\n';
            for (const auto& f : a.outputs) out << "out " << f << '\n';
            for (const auto& f : a.controls) out << "ctl " << f << '\n';
            for (const auto& f : a.mechanisms) out << "mech " << f << '\n';
        }
        return out.str();
    }
};

struct SadtViolation {
    std::string activity;  // empty for graph-level problems
    std::string kind;
    std::string detail;
};

struct SadtReport {
    std::vector<SadtViolation> violations;
    [[nodiscard]] bool valid() const noexcept { return violations.empty(); }
};

inline SadtReport sadt_validate(const SadtGraph& g) {
    SadtReport rep;
    auto add = [&](const std::string& act, std::string kind, std::string detail) {
        rep.violations.push_back({act, std::move(kind), std::move(detail)});
    };
    std::map<std::string, std::vector<std::string>> producers;
    std::set<std::string> names;
    for (const auto& a : g.activities) {
        if (a.name.empty()) add(a.name, "EmptyName", "activity without a name");
        if (!names.insert(a.name).second) add(a.name, "DuplicateActivity", "activity declared twice");
        if (a.inputs.empty()) add(a.name, "MissingInput", "activity has no input");
        if (a.outputs.empty()) add(a.name, "MissingOutput", "activity has no output");
        for (const auto* list : {&a.inputs, &a.outputs, &a.controls, &a.mechanisms})
            for (const auto& f : *list)
                if (f.empty()) add(a.name, "EmptyName", "flow without a name");
        for (const auto* list : {&a.controls, &a.mechanisms})
            for (const auto& f : *list)
                if (std::count(a.inputs.begin(), a.inputs.end(), f) || std::count(a.outputs.begin(), a.outputs.end(), f))
                    add(a.name, "RoleConflict", "'" + f + "' is both a control/mechanism and an input/output");
        for (const auto& f : a.outputs) producers[f].push_back(a.name);
    }
    for (const auto& [flow, acts] : producers)
        if (acts.size() > 1) add("", "DuplicateProducer", "flow '" + flow + "' is produced by more than one activity");
    if (!g.resources.empty()) {
        const std::set<std::string> declared(g.resources.begin(), g.resources.end());
        for (const auto& a : g.activities)
            for (const auto* list : {&a.controls, &a.mechanisms})
                for (const auto& f : *list)
                    if (!declared.contains(f) && !producers.contains(f))
                        add(a.name, "UndeclaredResource", "'" + f + "' is neither a declared resource nor an activity output");
    }
    // Connectivity through shared flow names (any role).
    const auto n = g.activities.size();
    if (n > 1) {
        std::vector<std::set<std::string>> flows(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = g.activities[i];
            for (const auto* list : {&a.inputs, &a.outputs, &a.controls, &a.mechanisms}) flows[i].insert(list->begin(), list->end());
        }
        std::vector<char> reached(n, 0);
        std::vector<std::size_t> stack{0};
        reached[0] = 1;
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < n; ++j) {
                if (reached[j]) continue;
                const bool shares = std::any_of(flows[i].begin(), flows[i].end(), [&](const std::string& f) { return flows[j].contains(f); });
                if (shares) {
                    reached[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        for (std::size_t j = 0; j < n; ++j)
            if (!reached[j]) add(g.activities[j].name, "Disconnected", "activity shares no flow with the rest of the graph");
    }
    return rep;
}

struct PathStep {
    std::string activity;
    std::string flow;  // the flow this activity produced on the path

    friend bool operator==(const PathStep&, const PathStep&) = default;
};

using CausePath = std::vector<PathStep>;
using FlowBindings = std::map<CriterionId, std::vector<std::string>>;

/// Every acyclic upstream path from the activities producing the flows the
/// firing's criterion is bound to. From each activity the walk follows its
/// inputs, then its controls, to their producing activities. Paths are
/// ordered by binding order, then activity and flow declaration order.
inline std::vector<CausePath> root_cause_paths(const SadtGraph& g, const CriterionFiring& firing, const FlowBindings& bindings) {
    std::vector<CausePath> out;
    const auto it = bindings.find(firing.criterion);
    if (it == bindings.end()) return out;

    auto producers_of = [&](const std::string& flow) {
        std::vector<std::size_t> p;
        for (std::size_t i = 0; i < g.activities.size(); ++i)
            if (std::count(g.activities[i].outputs.begin(), g.activities[i].outputs.end(), flow)) p.push_back(i);
        return p;
    };

    CausePath path;
    std::vector<char> on_path(g.activities.size(), 0);
    auto walk = [&](auto&& self, std::size_t act, const std::string& flow) -> void {
        path.push_back({g.activities[act].name, flow});
        on_path[act] = 1;
        bool extended = false;
        const auto& a = g.activities[act];
        for (const auto* list : {&a.inputs, &a.controls})
            for (const auto& up : *list)
                for (auto p : producers_of(up)) {
                    if (on_path[p]) continue;
                    extended = true;
                    self(self, p, up);
                }
        if (!extended) out.push_back(path);
        on_path[act] = 0;
        path.pop_back();
    };
    for (const auto& flow : it->second)
        for (auto p : producers_of(flow)) walk(walk, p, flow);
    return out;
}

/// Single-activity model of the machining process.
inline SadtGraph default_machining_graph() {
    return SadtGraph::parse(R"(activity Machining
in blank part
out machined part
ctl CNC program
mech operator
mech spindle
)");
}

}  // namespace machwatch

#endif  // MACHWATCH_RISK_SADT_HPP
