#ifndef MACHWATCH_CRITERIA_HISTORY_HPP
#define MACHWATCH_CRITERIA_HISTORY_HPP

#include "machwatch/timeseries/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace machwatch {

/// Empirical distribution of mean phase current per (operation, tool)
/// group. Built once, then read-only.
class QuantileStore {
public:
    using GroupKey = std::pair<Operation, std::string>;

    static QuantileStore build(std::span<const SensorSample> series) {
        QuantileStore q;
        for (const auto& s : series) q.groups_[{s.ctx.operation, s.ctx.tool}].push_back(s.current());
        for (auto& [k, v] : q.groups_) std::sort(v.begin(), v.end());
        return q;
    }

    /// Nearest-rank quantile: the ceil(q*n)-th smallest value.
    [[nodiscard]] double quantile(Operation op, const std::string& tool, double q) const {
        const auto it = groups_.find({op, tool});
        if (it == groups_.end())
            throw NotFound("no history for group (" + std::string(to_string(op)) + ", " + tool + ")");
        return nearest_rank(it->second, q);
    }

    [[nodiscard]] bool contains(Operation op, const std::string& tool) const { return groups_.contains({op, tool}); }
    [[nodiscard]] std::size_t group_count() const noexcept { return groups_.size(); }

    static double nearest_rank(const std::vector<double>& sorted, double q) {
        const auto n = sorted.size();
        auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
        rank = std::clamp<std::size_t>(rank, 1, n);
        return sorted[rank - 1];
    }

private:
    std::map<GroupKey, std::vector<double>> groups_;
};

}  // namespace machwatch

#endif  // MACHWATCH_CRITERIA_HISTORY_HPP
