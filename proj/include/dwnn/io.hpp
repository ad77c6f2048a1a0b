#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dwnn/core.hpp"

namespace dwnn::io {

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
    const std::string t = trim(cell);
    double value = 0.0;
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw std::runtime_error("csv: unparseable numeric cell at row " + std::to_string(row) +
                                 ", column " + std::to_string(col) + ": '" + cell + "'");
    return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV output with a fixed header; numeric cells are written with enough
// digits to round-trip doubles, so reruns are byte-identical.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path), columns_(header.size()) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path.string());
        write_row(header);
    }

    void write_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_)
            throw std::invalid_argument("CsvWriter: expected " + std::to_string(columns_) +
                                        " cells, got " + std::to_string(cells.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        if (!out_) throw std::runtime_error("CsvWriter: write failure");
    }

    static std::string num(double v) {
        if (std::isnan(v)) return "nan";
        std::ostringstream ss;
        ss.precision(12);
        ss << v;
        return ss.str();
    }
    static std::string num(std::size_t v) { return std::to_string(v); }

private:
    std::ofstream out_;
    std::size_t columns_;
};

// ---------------------------------------------------------------------------
// Raw CSV table (all cells as strings) with an optional header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::filesystem::path& path, bool has_header = true) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split(line, ',');
        if (first && has_header) {
            for (auto& c : cells) c = detail::trim(c);
            table.header = std::move(cells);
        } else {
            table.rows.push_back(std::move(cells));
        }
        first = false;
    }
    return table;
}

// Loads a labeled dataset from CSV. `label_column` is a header name or a
// 0-based index; the label column must contain exactly two distinct values,
// mapped to {0,1} either by `label_positive` (the raw value mapped to 1) or,
// when it is empty, by requiring the literal values 0 and 1.
inline Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                        const std::string& label_positive = "") {
    const CsvTable table = read_csv(path, true);
    if (table.rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path.string());
    const std::size_t width = table.header.size();
    std::size_t label_idx = width;
    const auto named = std::find(table.header.begin(), table.header.end(), label_column);
    if (named != table.header.end()) {
        label_idx = static_cast<std::size_t>(named - table.header.begin());
    } else {
        try {
            label_idx = static_cast<std::size_t>(std::stoul(label_column));
        } catch (...) {
            throw std::runtime_error("load_csv: label column '" + label_column + "' not found");
        }
        if (label_idx >= width)
            throw std::runtime_error("load_csv: label column index " + std::to_string(label_idx) +
                                     " out of range (width " + std::to_string(width) + ")");
    }

    std::set<std::string> distinct;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != width)
            throw std::runtime_error("load_csv: row " + std::to_string(r) + " has " +
                                     std::to_string(table.rows[r].size()) + " cells, expected " +
                                     std::to_string(width));
        distinct.insert(detail::trim(table.rows[r][label_idx]));
    }
    if (distinct.size() != 2) {
        std::string values;
        std::size_t shown = 0;
        for (const auto& v : distinct) {
            if (shown++ == 4) {
                values += ", ...";
                break;
            }
            values += (values.empty() ? "'" : ", '") + v + "'";
        }
        throw std::runtime_error("load_csv: label column must have exactly 2 distinct values, got " +
                                 std::to_string(distinct.size()) + " (" + values + ")");
    }
    std::string positive = label_positive;
    if (positive.empty()) {
        if (distinct.count("0") && distinct.count("1")) {
            positive = "1";
        } else {
            throw std::runtime_error(
                "load_csv: label values are not {0,1}; set label_positive to the value mapped to 1");
        }
    } else if (!distinct.count(positive)) {
        throw std::runtime_error("load_csv: label_positive '" + positive +
                                 "' does not occur in the label column");
    }

    Dataset out;
    out.n = table.rows.size();
    out.d = width - 1;
    if (out.d == 0) throw std::runtime_error("load_csv: no feature columns");
    out.features.reserve(out.n * out.d);
    out.labels.reserve(out.n);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            if (c == label_idx) continue;
            const double v = detail::parse_double(table.rows[r][c], r, c);
            if (!std::isfinite(v))
                throw std::runtime_error("load_csv: non-finite feature at row " + std::to_string(r) +
                                         ", column " + std::to_string(c));
            out.features.push_back(v);
        }
        out.labels.push_back(detail::trim(table.rows[r][label_idx]) == positive ? 1 : 0);
    }
    return out;
}

// Per-column affine standardization, fit on a training portion only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;  // 1/sd; columns with zero variance keep scale 1

    static Standardizer fit(const Dataset& train) {
        Standardizer s;
        s.mean.assign(train.d, 0.0);
        s.scale.assign(train.d, 1.0);
        for (std::size_t i = 0; i < train.n; ++i)
            for (std::size_t j = 0; j < train.d; ++j) s.mean[j] += train.features[i * train.d + j];
        for (auto& m : s.mean) m /= static_cast<double>(train.n);
        std::vector<double> var(train.d, 0.0);
        for (std::size_t i = 0; i < train.n; ++i)
            for (std::size_t j = 0; j < train.d; ++j) {
                const double c = train.features[i * train.d + j] - s.mean[j];
                var[j] += c * c;
            }
        for (std::size_t j = 0; j < train.d; ++j) {
            if (train.n > 1) var[j] /= static_cast<double>(train.n - 1);
            if (var[j] > 0.0) s.scale[j] = 1.0 / std::sqrt(var[j]);
        }
        return s;
    }

    void apply(Dataset& data) const {
        if (data.d != mean.size()) throw std::invalid_argument("Standardizer: dimension mismatch");
        for (std::size_t i = 0; i < data.n; ++i)
            for (std::size_t j = 0; j < data.d; ++j) {
                auto& v = data.features[i * data.d + j];
                v = (v - mean[j]) * scale[j];
            }
    }
};

// ---------------------------------------------------------------------------
// Flat key-value configuration: one `key = value` per line, '#' comments.
class Config {
public:
    static Config parse_string(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = detail::trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": expected 'key = value', got '" + t + "'");
            const std::string key = detail::trim(t.substr(0, eq));
            const std::string value = detail::trim(t.substr(eq + 1));
            if (key.empty())
                throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
            if (cfg.values_.count(key))
                throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                         key + "'");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static Config parse_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("Config: cannot open " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str(), path.string());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw std::runtime_error(origin_ + ": missing required key '" + key + "'");
        accessed_.insert(key);
        return it->second;
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        accessed_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : (accessed_.insert(key), fallback);
    }

    std::uint64_t get_u64(const std::string& key) const { return to_u64(key, get_string(key)); }
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? get_u64(key) : (accessed_.insert(key), fallback);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) {
            accessed_.insert(key);
            return fallback;
        }
        const std::string v = get_string(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw std::runtime_error(origin_ + ": key '" + key + "' expects a boolean, got '" + v + "'");
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : detail::split(get_string(key), ',')) {
            const std::string t = detail::trim(item);
            if (t.empty()) continue;
            out.push_back(to_double(key, t));
        }
        if (out.empty()) throw std::runtime_error(origin_ + ": key '" + key + "' lists no values");
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& item : detail::split(get_string(key), ',')) {
            const std::string t = detail::trim(item);
            if (!t.empty()) out.push_back(t);
        }
        if (out.empty()) throw std::runtime_error(origin_ + ": key '" + key + "' lists no values");
        return out;
    }

    // Keys present in the file but never read by the consumer; used to reject
    // misspelled configuration.
    std::vector<std::string> unread_keys() const {
        std::vector<std::string> out;
        for (const auto& [key, value] : values_)
            if (!accessed_.count(key)) out.push_back(key);
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }
    const std::string& origin() const { return origin_; }

private:
    double to_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            const double out = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return out;
        } catch (...) {
            throw std::runtime_error(origin_ + ": key '" + key + "' expects a number, got '" + v + "'");
        }
    }
    std::uint64_t to_u64(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            const unsigned long long out = std::stoull(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return out;
        } catch (...) {
            throw std::runtime_error(origin_ + ": key '" + key + "' expects an unsigned integer, got '" +
                                     v + "'");
        }
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> accessed_;
    std::string origin_;
};

}  // namespace dwnn::io
