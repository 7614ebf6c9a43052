#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/normal.hpp"

namespace censnv {

/**
 * Linear demand model on dummy-encoded calendar and category features.
 *
 * Feature layout (26 columns): f01 intercept, f02..f09 categories 1..8,
 * f10..f15 Tue..Sun, f16..f26 Feb..Dec. Category 9, Monday and January are
 * the all-zero base levels.
 */
struct DemandModelParams {
    double intercept = 113.40;
    std::array<double, 8> category_coefs{192.23, 151.66, -57.3, 51.56, 55.42, -76.14, 130.65, -106.29};
    std::array<double, 6> weekday_coefs{-3.64, -25.41, -29.90, -32.75, 21.15, 38.13};
    std::array<double, 11> month_coefs{-3.46, 1.57, 11.94, 7.88, -1.58, -13.21, -11.9, 1.96, -1.67, -3.48, 20.03};
    double noise_mean = 0.0;
    double noise_std = 46.57;

    static constexpr std::size_t kCategories = 9;
    static constexpr std::size_t kFeatureDim = 1 + 8 + 6 + 11;

    // Coefficient vector aligned with encode_features().
    std::vector<double> beta() const {
        std::vector<double> b;
        b.reserve(kFeatureDim);
        b.push_back(intercept);
        b.insert(b.end(), category_coefs.begin(), category_coefs.end());
        b.insert(b.end(), weekday_coefs.begin(), weekday_coefs.end());
        b.insert(b.end(), month_coefs.begin(), month_coefs.end());
        return b;
    }
};

inline constexpr Date kCalendarStart{std::chrono::year{2016}, std::chrono::month{1}, std::chrono::day{1}};
inline constexpr Date kCalendarEnd{std::chrono::year{2017}, std::chrono::month{6}, std::chrono::day{30}};
inline constexpr Date kTestStart{std::chrono::year{2017}, std::chrono::month{1}, std::chrono::day{1}};

inline std::vector<double> encode_features(int category, const Date& date) {
    if (category < 1 || category > static_cast<int>(DemandModelParams::kCategories)) {
        throw InputError("category must lie in 1..9");
    }
    std::vector<double> x(DemandModelParams::kFeatureDim, 0.0);
    x[0] = 1.0;
    if (category <= 8) x[static_cast<std::size_t>(category)] = 1.0;
    // iso_encoding: Monday = 1 ... Sunday = 7; Monday is the base level.
    const unsigned wd = std::chrono::weekday(std::chrono::sys_days(date)).iso_encoding();
    if (wd >= 2) x[9 + (wd - 2)] = 1.0;
    const unsigned m = static_cast<unsigned>(date.month());
    if (m >= 2) x[15 + (m - 2)] = 1.0;
    return x;
}

// beta' x on raw (unscaled) dummy features.
inline double deterministic_demand(const DemandModelParams& params, std::span<const double> features) {
    const auto b = params.beta();
    if (features.size() != b.size()) {
        throw InputError("deterministic_demand: expected " + std::to_string(b.size()) + " features");
    }
    double v = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) v += b[j] * features[j];
    return v;
}

// Distribution-optimal order quantity: beta' x plus the alpha-quantile of the noise.
inline double q_star(const DemandModelParams& params, std::span<const double> features, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("q_star: alpha must lie in (0,1)");
    return deterministic_demand(params, features) + params.noise_mean + params.noise_std * normal_quantile(alpha);
}

// Generated data together with the latent quantities the rows do not carry.
struct SyntheticSample {
    Dataset data;
    std::vector<double> mean_demand;  // beta' x per row
    std::vector<double> noise;        // raw noise draw per row, before truncation
};

/**
 * One row per (day, category) over 2016-01-01 .. 2017-06-30, date-major.
 *
 * demand = max(0, beta'x + noise), historical order = max(0, beta'x),
 * sale = min(order, demand).
 */
inline SyntheticSample generate_with_ground_truth(const DemandModelParams& params, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(params.noise_mean, params.noise_std);
    SyntheticSample out;
    const auto first = std::chrono::sys_days(kCalendarStart);
    const auto last = std::chrono::sys_days(kCalendarEnd);
    for (auto day = first; day <= last; day += std::chrono::days{1}) {
        const Date date{day};
        for (int c = 1; c <= static_cast<int>(DemandModelParams::kCategories); ++c) {
            Row r;
            r.date = date;
            r.category = c;
            r.features = encode_features(c, date);
            const double mean = deterministic_demand(params, r.features);
            const double e = noise(rng);
            const double demand = std::max(0.0, mean + e);
            const double order = std::max(0.0, mean);
            r.demand = demand;
            r.sale = std::min(order, demand);
            out.mean_demand.push_back(mean);
            out.noise.push_back(e);
            out.data.rows.push_back(std::move(r));
        }
    }
    return out;
}

inline Dataset generate(const DemandModelParams& params, std::uint64_t seed) {
    return generate_with_ground_truth(params, seed).data;
}

// Train = calendar year 2016, test = 2017-01-01 .. 2017-06-30.
inline std::pair<Dataset, Dataset> split_chronological(const Dataset& data) {
    if (data.empty()) throw InputError("split_chronological: empty dataset");
    std::set<int> days;
    for (const auto& r : data.rows) days.insert(std::chrono::sys_days(r.date).time_since_epoch().count());
    const int lo = std::chrono::sys_days(kCalendarStart).time_since_epoch().count();
    const int hi = std::chrono::sys_days(kCalendarEnd).time_since_epoch().count();
    if (*days.begin() != lo || *days.rbegin() != hi ||
        days.size() != static_cast<std::size_t>(hi - lo + 1)) {
        throw InputError("split_chronological: dataset does not cover every day of " + to_iso(kCalendarStart) +
                         " .. " + to_iso(kCalendarEnd));
    }
    Dataset train;
    Dataset test;
    train.scaling = data.scaling;
    test.scaling = data.scaling;
    for (const auto& r : data.rows) {
        if (r.date < kTestStart) train.rows.push_back(r);
        else test.rows.push_back(r);
    }
    return {std::move(train), std::move(test)};
}

// Applies a fitted record to every row (features and all target fields).
inline Dataset apply_scaling(const Dataset& data, const ScalingRecord& rec) {
    Dataset out = data;
    out.scaling = rec;
    for (auto& r : out.rows) {
        if (r.features.size() != rec.feature_mean.size()) {
            throw InputError("apply_scaling: expected " + std::to_string(rec.feature_mean.size()) + " features");
        }
        for (std::size_t j = 0; j < r.features.size(); ++j) {
            r.features[j] = (r.features[j] - rec.feature_mean[j]) / rec.feature_std[j];
        }
        r.sale = rec.scale_target(r.sale);
        if (r.demand) r.demand = rec.scale_target(*r.demand);
        if (r.q_star) r.q_star = rec.scale_target(*r.q_star);
    }
    return out;
}

inline ScalingRecord fit_scaling(const Dataset& train) {
    train.check_rectangular();
    const std::size_t p = train.dim();
    const double n = static_cast<double>(train.size());
    ScalingRecord rec;
    rec.feature_mean.assign(p, 0.0);
    rec.feature_std.assign(p, 1.0);
    rec.unscaled.push_back(0);
    for (std::size_t j = 1; j < p; ++j) {
        double mean = 0.0;
        for (const auto& r : train.rows) mean += r.features[j];
        mean /= n;
        double var = 0.0;
        for (const auto& r : train.rows) var += (r.features[j] - mean) * (r.features[j] - mean);
        const double sd = std::sqrt(var / n);
        if (!(sd > 1e-12 * (1.0 + std::abs(mean)))) {
            rec.unscaled.push_back(j);
            continue;
        }
        rec.feature_mean[j] = mean;
        rec.feature_std[j] = sd;
    }
    double lo = train.rows.front().sale;
    double hi = lo;
    for (const auto& r : train.rows) {
        lo = std::min(lo, r.sale);
        hi = std::max(hi, r.sale);
    }
    if (!(hi > lo)) throw InputError("fit_scaling: training sales have zero range");
    rec.target_min = lo;
    rec.target_max = hi;
    return rec;
}

/**
 * Standardizes features j >= 1 and min-max scales targets by the training
 * sales range. The test partition gets the same maps, without clipping.
 */
inline std::tuple<Dataset, Dataset, ScalingRecord> scale(const Dataset& train, const Dataset& test) {
    ScalingRecord rec = fit_scaling(train);
    return {apply_scaling(train, rec), apply_scaling(test, rec), rec};
}

// Sets q_star on every row from raw (unscaled) features.
inline void attach_q_star(Dataset& raw, const DemandModelParams& params, double alpha) {
    for (auto& r : raw.rows) r.q_star = q_star(params, r.features, alpha);
}

}  // namespace censnv
