#ifndef MACHWATCH_LABELING_TAXONOMY_HPP
#define MACHWATCH_LABELING_TAXONOMY_HPP

#include "machwatch/criteria/criterion.hpp"
#include "machwatch/kv_config.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace machwatch {

struct AnomalyClass {
    int id = 0;
    std::string name;
    std::vector<CriterionId> members;  // empty only for the normal class

    friend bool operator==(const AnomalyClass&, const AnomalyClass&) = default;
};

/// Grouping of criteria into anomaly classes. Class 0 is the reserved
/// normal class; every criterion belongs to exactly one other class.
/// Membership is by id, names are display only.
class Taxonomy {
public:
    static constexpr int kNormal = 0;

    Taxonomy() = default;

    /// Classes are given in order and get ids 1..n; the normal class is added.
    Taxonomy(std::string normal_name, std::vector<std::pair<std::string, std::vector<CriterionId>>> groups) {
        classes_.push_back({kNormal, std::move(normal_name), {}});
        int next = 1;
        for (auto& [name, members] : groups) classes_.push_back({next++, std::move(name), std::move(members)});
        validate();
    }

    [[nodiscard]] const std::vector<AnomalyClass>& classes() const noexcept { return classes_; }
    [[nodiscard]] std::size_t size() const noexcept { return classes_.size(); }

    [[nodiscard]] int class_of(CriterionId id) const { return owner_[ordinal(id)]; }

    [[nodiscard]] const AnomalyClass& at(int class_id) const {
        for (const auto& c : classes_)
            if (c.id == class_id) return c;
        throw NotFound("unknown class id " + std::to_string(class_id));
    }

    [[nodiscard]] const std::string& name(int class_id) const { return at(class_id).name; }

    [[nodiscard]] int id_of(const std::string& name) const {
        for (const auto& c : classes_)
            if (c.name == name) return c.id;
        throw NotFound("unknown class '" + name + "'");
    }

    void rename(int class_id, std::string name) {
        for (auto& c : classes_)
            if (c.id == class_id) c.name = std::move(name);
        validate();
    }

    /// `taxonomy.<ClassName> = Criterion,Criterion,...` lines; the normal
    /// class name comes from `taxonomy.normal` (default "Normal").
    static std::optional<Taxonomy> from_kv(const KvConfig& kv) {
        std::vector<std::pair<std::string, std::vector<CriterionId>>> groups;
        std::string normal = "Normal";
        for (const auto& [key, value] : kv.entries()) {
            if (key.rfind("taxonomy.", 0) != 0) continue;
            const auto name = key.substr(9);
            if (name == "normal") {
                normal = value;
                continue;
            }
            std::vector<CriterionId> members;
            for (auto tok : text::split(value, ',')) members.push_back(parse_criterion(text::trim(tok)));
            groups.emplace_back(name, std::move(members));
        }
        if (groups.empty()) return std::nullopt;
        return Taxonomy(std::move(normal), std::move(groups));
    }

    [[nodiscard]] KvConfig to_kv() const {
        KvConfig kv;
        kv.set("taxonomy.normal", classes_.at(0).name);
        for (std::size_t i = 1; i < classes_.size(); ++i) {
            std::vector<std::string> toks;
            for (auto m : classes_[i].members) toks.emplace_back(to_string(m));
            kv.set("taxonomy." + classes_[i].name, text::join(toks, ","));
        }
        return kv;
    }

    friend bool operator==(const Taxonomy&, const Taxonomy&) = default;

private:
    void validate() {
        owner_.fill(-1);
        for (std::size_t i = 0; i < classes_.size(); ++i) {
            const auto& c = classes_[i];
            if (c.name.empty()) throw DataError("anomaly class with empty name");
            for (std::size_t j = 0; j < i; ++j)
                if (classes_[j].name == c.name) throw DataError("duplicate anomaly class '" + c.name + "'");
            if (c.id == kNormal) {
                if (!c.members.empty()) throw DataError("normal class cannot own criteria");
                continue;
            }
            if (c.members.empty()) throw DataError("anomaly class '" + c.name + "' has no criteria");
            for (auto m : c.members) {
                if (owner_[ordinal(m)] != -1)
                    throw DataError("criterion " + std::string(to_string(m)) + " belongs to more than one class");
                owner_[ordinal(m)] = c.id;
            }
        }
        for (auto id : kAllCriteria)
            if (owner_[ordinal(id)] == -1)
                throw DataError("criterion " + std::string(to_string(id)) + " is not assigned to any class");
    }

    std::vector<AnomalyClass> classes_;
    std::array<int, kCriterionCount> owner_{};
};

/// Five anomaly classes over the ten criteria plus the normal class.
inline Taxonomy default_taxonomy() {
    using C = CriterionId;
    return Taxonomy("Normal", {
                                  {"ThermalAnomaly", {C::TempGradient}},
                                  {"CurrentAnomaly", {C::CurrentPeakCount, C::CurrentIntensityChange, C::SpindleRpmRise}},
                                  {"VibrationAnomaly", {C::ExcessVibration, C::VibrationWithoutCurrent_V}},
                                  {"SensorOrIdleAnomaly", {C::VibrationWithoutCurrent_C, C::CurrentWithoutVibration, C::ZeroDrop}},
                                  {"UsageAnomaly", {C::OutOfHoursUse}},
                              });
}

}  // namespace machwatch

#endif  // MACHWATCH_LABELING_TAXONOMY_HPP
