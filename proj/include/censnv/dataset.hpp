#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "censnv/error.hpp"

namespace censnv {

using Date = std::chrono::year_month_day;

inline std::string to_iso(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

inline std::optional<Date> parse_iso(std::string_view s) {
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto num = [&](std::size_t off, std::size_t len, auto& out) {
        auto [p, ec] = std::from_chars(s.data() + off, s.data() + off + len, out);
        return ec == std::errc{} && p == s.data() + off + len;
    };
    if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
    Date out{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!out.ok()) return std::nullopt;
    return out;
}

struct Row {
    Date date{std::chrono::year{1970}, std::chrono::month{1}, std::chrono::day{1}};
    int category = 0;               // 1..9 for generated data, 0 when not applicable
    std::vector<double> features;   // features[0] is the constant 1
    double sale = 0.0;
    std::optional<double> demand;
    std::optional<double> q_star;

    bool operator==(const Row&) const = default;
};

/**
 * Affine maps fitted on a training partition.
 *
 * Features j >= 1 are standardized with (x - mean) / std; columns listed in
 * `unscaled` (the intercept and zero-variance columns) keep mean 0, std 1.
 * Targets (sale, demand, q_star) map to (v - target_min) / (target_max - target_min).
 */
struct ScalingRecord {
    double target_min = 0.0;
    double target_max = 1.0;
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    std::vector<std::size_t> unscaled;

    double target_range() const { return target_max - target_min; }
    double scale_target(double v) const { return (v - target_min) / target_range(); }
    double unscale_target(double v) const { return v * target_range() + target_min; }

    bool operator==(const ScalingRecord&) const = default;
};

struct Dataset {
    std::vector<Row> rows;
    std::optional<ScalingRecord> scaling;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    std::size_t dim() const { return rows.empty() ? 0 : rows.front().features.size(); }

    bool has_demand() const {
        if (rows.empty()) return false;
        for (const auto& r : rows)
            if (!r.demand) return false;
        return true;
    }
    bool has_q_star() const {
        if (rows.empty()) return false;
        for (const auto& r : rows)
            if (!r.q_star) return false;
        return true;
    }

    std::vector<double> sales() const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.sale);
        return out;
    }
    std::vector<double> demands() const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.demand.value());
        return out;
    }
    std::vector<double> q_stars() const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.q_star.value());
        return out;
    }

    Dataset subset(const std::vector<std::size_t>& idx) const {
        Dataset out;
        out.scaling = scaling;
        out.rows.reserve(idx.size());
        for (std::size_t i : idx) out.rows.push_back(rows.at(i));
        return out;
    }

    // Rows must share one feature dimension p >= 1.
    void check_rectangular() const {
        if (rows.empty()) throw InputError("dataset is empty");
        const std::size_t p = dim();
        if (p == 0) throw InputError("dataset has no features");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].features.size() != p) {
                throw InputError("row " + std::to_string(i) + " has " +
                                 std::to_string(rows[i].features.size()) + " features, expected " +
                                 std::to_string(p));
            }
        }
    }

    // Generic (x, s) data; rows carry no calendar information.
    static Dataset from_xy(const std::vector<std::vector<double>>& x, const std::vector<double>& s) {
        if (x.size() != s.size()) throw InputError("from_xy: feature and target counts differ");
        Dataset out;
        out.rows.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            out.rows[i].features = x[i];
            out.rows[i].sale = s[i];
        }
        return out;
    }

    bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------------------
// Text I/O
// ---------------------------------------------------------------------------

inline std::string format_double(double v, int digits = 17) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

inline std::string feature_column_name(std::size_t j) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "f%02zu", j + 1);
    return buf;
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

inline std::string sidecar_path(const std::filesystem::path& csv) { return csv.string() + ".scaling"; }

inline void save_scaling(const ScalingRecord& rec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "target_min=" << format_double(rec.target_min) << '\n';
    out << "target_max=" << format_double(rec.target_max) << '\n';
    out << "unscaled=";
    for (std::size_t k = 0; k < rec.unscaled.size(); ++k) {
        out << (k ? "," : "") << feature_column_name(rec.unscaled[k]);
    }
    out << '\n';
    for (std::size_t j = 0; j < rec.feature_mean.size(); ++j) {
        out << feature_column_name(j) << ".mean=" << format_double(rec.feature_mean[j]) << '\n';
        out << feature_column_name(j) << ".std=" << format_double(rec.feature_std[j]) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

inline ScalingRecord load_scaling(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    ScalingRecord rec;
    std::map<std::size_t, double> mean;
    std::map<std::size_t, double> sd;
    std::string line;
    std::size_t lineno = 0;
    auto column_index = [&](std::string_view name) -> std::size_t {
        if (name.size() < 2 || name[0] != 'f') throw ParseError("bad column name '" + std::string(name) + "'", lineno);
        std::size_t j = 0;
        auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), j);
        if (ec != std::errc{} || p != name.data() + name.size() || j == 0) {
            throw ParseError("bad column name '" + std::string(name) + "'", lineno);
        }
        return j - 1;
    };
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
        const std::string key = line.substr(0, eq);
        const std::string_view val(line.data() + eq + 1, line.size() - eq - 1);
        if (key == "unscaled") {
            if (!val.empty())
                for (auto tok : detail::split_commas(val)) rec.unscaled.push_back(column_index(tok));
            continue;
        }
        const auto v = detail::parse_double(val);
        if (!v) throw ParseError("non-numeric value for " + key, lineno);
        if (key == "target_min") {
            rec.target_min = *v;
        } else if (key == "target_max") {
            rec.target_max = *v;
        } else if (key.ends_with(".mean")) {
            mean[column_index(std::string_view(key).substr(0, key.size() - 5))] = *v;
        } else if (key.ends_with(".std")) {
            sd[column_index(std::string_view(key).substr(0, key.size() - 4))] = *v;
        } else {
            throw ParseError("unknown key " + key, lineno);
        }
    }
    if (mean.size() != sd.size()) throw ParseError("mean/std entries do not pair up");
    for (std::size_t j = 0; j < mean.size(); ++j) {
        if (!mean.count(j) || !sd.count(j)) throw ParseError("missing scaling entries for " + feature_column_name(j));
        rec.feature_mean.push_back(mean[j]);
        rec.feature_std.push_back(sd[j]);
    }
    return rec;
}

/**
 * Writes `date,category,sale,demand,f01..fNN` (plus a trailing q_star column
 * when every row carries one). Missing demand is an empty cell. When the
 * dataset has a scaling record it is written to `<path>.scaling`.
 */
inline void save_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    const std::size_t p = data.dim();
    const bool with_q = data.has_q_star();
    out << "date,category,sale,demand";
    for (std::size_t j = 0; j < p; ++j) out << ',' << feature_column_name(j);
    if (with_q) out << ",q_star";
    out << '\n';
    for (const auto& r : data.rows) {
        out << to_iso(r.date) << ',' << r.category << ',' << format_double(r.sale) << ',';
        if (r.demand) out << format_double(*r.demand);
        for (double f : r.features) out << ',' << format_double(f);
        if (with_q) out << ',' << format_double(*r.q_star);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
    if (data.scaling) save_scaling(*data.scaling, sidecar_path(path));
}

inline Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file " + path.string(), 1);
    detail::strip_cr(line);
    const auto header = detail::split_commas(line);

    std::optional<std::size_t> c_date, c_cat, c_sale, c_demand, c_q;
    std::vector<std::pair<std::size_t, std::size_t>> features;  // (feature index, column)
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto h = header[c];
        if (h == "date") c_date = c;
        else if (h == "category") c_cat = c;
        else if (h == "sale") c_sale = c;
        else if (h == "demand") c_demand = c;
        else if (h == "q_star") c_q = c;
        else if (h.size() >= 2 && h[0] == 'f') {
            std::size_t j = 0;
            auto [p, ec] = std::from_chars(h.data() + 1, h.data() + h.size(), j);
            if (ec != std::errc{} || p != h.data() + h.size() || j == 0) {
                throw ParseError("malformed header column '" + std::string(h) + "'", 1);
            }
            features.emplace_back(j - 1, c);
        } else {
            throw ParseError("malformed header column '" + std::string(h) + "'", 1);
        }
    }
    if (!c_sale) throw ParseError("missing required column 'sale'", 1);
    if (!c_date) throw ParseError("missing required column 'date'", 1);
    if (!c_cat) throw ParseError("missing required column 'category'", 1);
    if (features.empty()) throw ParseError("no feature columns f01..", 1);
    std::sort(features.begin(), features.end());
    for (std::size_t k = 0; k < features.size(); ++k) {
        if (features[k].first != k) throw ParseError("feature columns must be f01..fNN without gaps", 1);
    }

    Dataset data;
    std::set<std::pair<int, int>> keys;  // (days since epoch, category)
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto cells = detail::split_commas(line);
        if (cells.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                                 std::to_string(cells.size()),
                             lineno);
        }
        Row r;
        const auto date = parse_iso(cells[*c_date]);
        if (!date) throw ParseError("bad date '" + std::string(cells[*c_date]) + "'", lineno);
        r.date = *date;
        {
            auto cell = cells[*c_cat];
            auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), r.category);
            if (ec != std::errc{} || p != cell.data() + cell.size()) {
                throw ParseError("non-numeric category '" + std::string(cell) + "'", lineno);
            }
        }
        auto number = [&](std::size_t col, const char* name) {
            const auto v = detail::parse_double(cells[col]);
            if (!v) throw ParseError(std::string("non-numeric ") + name + " '" + std::string(cells[col]) + "'", lineno);
            return *v;
        };
        r.sale = number(*c_sale, "sale");
        if (c_demand && !cells[*c_demand].empty()) r.demand = number(*c_demand, "demand");
        if (c_q && !cells[*c_q].empty()) r.q_star = number(*c_q, "q_star");
        r.features.reserve(features.size());
        for (const auto& [j, col] : features) r.features.push_back(number(col, "feature"));

        const int day = std::chrono::sys_days(r.date).time_since_epoch().count();
        if (!keys.emplace(day, r.category).second) {
            throw ParseError("duplicate (date, category) key " + to_iso(r.date) + "/" + std::to_string(r.category),
                             lineno);
        }
        data.rows.push_back(std::move(r));
    }
    if (std::filesystem::exists(sidecar_path(path))) data.scaling = load_scaling(sidecar_path(path));
    return data;
}

}  // namespace censnv
