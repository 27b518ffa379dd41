#ifndef MACHWATCH_KV_CONFIG_HPP
#define MACHWATCH_KV_CONFIG_HPP

#include "machwatch/error.hpp"
#include "machwatch/text.hpp"

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace machwatch {

/// Flat `key = value` configuration. One entry per line, `#` starts a
/// comment line, keys are unique, insertion order is kept for rendering.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse(std::string_view body) {
        KvConfig cfg;
        std::size_t line_no = 0;
        for (auto raw : text::split(body, '\n')) {
            ++line_no;
            const auto line = text::trim(raw);
            if (line.empty() || line.front() == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw DataError("config line " + std::to_string(line_no) + ": expected 'key = value'");
            const auto key = text::trim(line.substr(0, eq));
            const auto value = text::trim(line.substr(eq + 1));
            if (key.empty()) throw DataError("config line " + std::to_string(line_no) + ": empty key");
            if (cfg.has(key)) throw DataError("config line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
            cfg.entries_.emplace_back(std::string(key), std::string(value));
        }
        return cfg;
    }

    static KvConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot read config '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    [[nodiscard]] bool has(std::string_view key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return true;
        return false;
    }

    [[nodiscard]] std::optional<std::string> get(std::string_view key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        return std::nullopt;
    }

    [[nodiscard]] std::string require(std::string_view key) const {
        auto v = get(key);
        if (!v) throw DataError("missing config key '" + std::string(key) + "'");
        return *v;
    }

    [[nodiscard]] double get_double(std::string_view key, double fallback) const {
        auto v = get(key);
        return v ? text::parse_double(*v) : fallback;
    }

    [[nodiscard]] std::int64_t get_int(std::string_view key, std::int64_t fallback) const {
        auto v = get(key);
        return v ? text::parse_int(*v) : fallback;
    }

    [[nodiscard]] bool get_bool(std::string_view key, bool fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        throw DataError("config key '" + std::string(key) + "': expected true/false");
    }

    void set(std::string key, std::string value) {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = std::move(value);
                return;
            }
        entries_.emplace_back(std::move(key), std::move(value));
    }

    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    [[nodiscard]] std::string render() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
        return out;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace machwatch

#endif  // MACHWATCH_KV_CONFIG_HPP
