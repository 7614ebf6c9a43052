#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/loss.hpp"

namespace censnv {

namespace detail {

inline void check_predictions(const Dataset& test, std::span<const double> predictions, const char* who) {
    if (test.empty()) throw EvaluationError(std::string(who) + ": empty test set");
    if (predictions.size() != test.size()) {
        throw EvaluationError(std::string(who) + ": " + std::to_string(predictions.size()) + " predictions for " +
                              std::to_string(test.size()) + " rows");
    }
}

inline void require_demand(const Dataset& test, const char* who) {
    if (!test.has_demand()) throw EvaluationError(std::string(who) + ": every test row needs a demand value");
}

}  // namespace detail

// Mean of alpha (d - y)+ + (1 - alpha)(y - d)+ over the test rows.
inline double nv_cost(const Dataset& test, std::span<const double> predictions, double alpha) {
    detail::check_predictions(test, predictions, "nv_cost");
    detail::require_demand(test, "nv_cost");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("nv_cost: alpha must lie in (0,1)");
    double acc = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double d = *test.rows[i].demand;
        const double y = predictions[i];
        acc += alpha * detail::pos(d - y) + (1.0 - alpha) * detail::pos(y - d);
    }
    return acc / static_cast<double>(test.size());
}

// Root mean squared distance to the distribution-optimal quantity.
inline double rmse_q(const Dataset& test, std::span<const double> predictions) {
    detail::check_predictions(test, predictions, "rmse_q");
    if (!test.has_q_star()) {
        throw EvaluationError("rmse_q: rows carry no optimal quantity; RMSE^Q requires the generative demand model");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double e = *test.rows[i].q_star - predictions[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(test.size()));
}

// Fraction of rows where the decision strictly exceeds realized demand.
inline double service_level(const Dataset& test, std::span<const double> predictions) {
    detail::check_predictions(test, predictions, "service_level");
    detail::require_demand(test, "service_level");
    std::size_t over = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
        if (predictions[i] > *test.rows[i].demand) ++over;
    return static_cast<double>(over) / static_cast<double>(test.size());
}

inline double savings_percent(double cost_base, double cost_new) {
    if (!(cost_base > 0.0)) throw EvaluationError("savings_percent: base cost must be > 0");
    return 100.0 * (cost_base - cost_new) / cost_base;
}

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

// Inclusive linear interpolation: position q (n - 1) in the sorted values.
inline double quantile_inclusive(std::vector<double> values, double q) {
    if (values.empty()) throw InputError("quantile: empty input");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline Quartiles quartiles(const std::vector<double>& values) {
    if (values.empty()) throw InputError("quartiles: empty input");
    return {quantile_inclusive(values, 0.25), quantile_inclusive(values, 0.5), quantile_inclusive(values, 0.75)};
}

/**
 * Out-of-sample metrics for one fitted decision rule, in original units.
 * Metrics whose inputs are missing (no demand, no optimal quantity) stay empty.
 */
struct EvalReport {
    std::optional<double> nv_cost;
    std::optional<double> rmse_q;
    std::optional<double> service_level;
    std::optional<double> service_gap;
    std::vector<double> abs_errors;  // |y - Q*| per row, empty without Q*
    double fit_seconds = 0.0;
};

inline EvalReport evaluate(const Dataset& test, std::span<const double> predictions, double alpha,
                           double fit_seconds = 0.0) {
    detail::check_predictions(test, predictions, "evaluate");
    EvalReport r;
    r.fit_seconds = fit_seconds;
    if (test.has_demand()) {
        r.nv_cost = nv_cost(test, predictions, alpha);
        r.service_level = service_level(test, predictions);
        r.service_gap = std::abs(*r.service_level - alpha);
    }
    if (test.has_q_star()) {
        r.rmse_q = rmse_q(test, predictions);
        r.abs_errors.reserve(test.size());
        for (std::size_t i = 0; i < test.size(); ++i)
            r.abs_errors.push_back(std::abs(predictions[i] - *test.rows[i].q_star));
    }
    return r;
}

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double p_value = 1.0;
    double median_diff = 0.0;
    double q1_diff = 0.0;
    double q3_diff = 0.0;
    std::size_t n_effective = 0;
    bool exact = false;
    bool degenerate = false;  // every difference was zero
};

namespace detail {

// Average ranks (1-based) of the values, ties sharing the mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace detail

/**
 * Exact two-sided p-value of the signed-rank statistic given the ranks of the
 * nonzero differences. Counts sign patterns with min(W+, T - W+) at most the
 * observed one. Ranks may be half-integers (ties).
 */
inline double wilcoxon_exact_p(const std::vector<double>& ranks, double w_plus) {
    std::vector<std::int64_t> doubled;
    std::int64_t total = 0;
    for (double r : ranks) {
        doubled.push_back(std::llround(2.0 * r));
        total += doubled.back();
    }
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    std::int64_t reach = 0;
    for (auto r : doubled) {
        for (std::int64_t k = reach; k >= 0; --k)
            if (count[static_cast<std::size_t>(k)] != 0.0) count[static_cast<std::size_t>(k + r)] += count[static_cast<std::size_t>(k)];
        reach += r;
    }
    const std::int64_t w2 = std::llround(2.0 * w_plus);
    const std::int64_t observed = std::min(w2, total - w2);
    double hits = 0.0, all = 0.0;
    for (std::int64_t k = 0; k <= total; ++k) {
        const double c = count[static_cast<std::size_t>(k)];
        all += c;
        if (std::min(k, total - k) <= observed) hits += c;
    }
    return std::min(1.0, hits / all);
}

inline constexpr std::size_t kWilcoxonExactMax = 25;

// Paired two-sided signed-rank test on a - b.
inline WilcoxonResult wilcoxon_paired(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw InputError("wilcoxon_paired: length mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    if (a.size() < 10) throw InputError("wilcoxon_paired: need at least 10 pairs");
    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];

    WilcoxonResult res;
    const auto q = quartiles(diffs);
    res.q1_diff = q.q1;
    res.median_diff = q.median;
    res.q3_diff = q.q3;

    std::vector<double> nonzero;
    for (double d : diffs)
        if (d != 0.0) nonzero.push_back(d);
    res.n_effective = nonzero.size();
    if (nonzero.empty()) {
        res.degenerate = true;
        res.p_value = 1.0;
        return res;
    }
    std::vector<double> mags(nonzero.size());
    for (std::size_t i = 0; i < nonzero.size(); ++i) mags[i] = std::abs(nonzero[i]);
    const auto ranks = detail::average_ranks(mags);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < nonzero.size(); ++i)
        if (nonzero[i] > 0.0) w_plus += ranks[i];
    const double n = static_cast<double>(nonzero.size());
    const double total = n * (n + 1.0) / 2.0;
    res.w_plus = w_plus;
    res.statistic = std::min(w_plus, total - w_plus);

    if (nonzero.size() <= kWilcoxonExactMax) {
        res.exact = true;
        res.p_value = wilcoxon_exact_p(ranks, w_plus);
        return res;
    }
    double tie_term = 0.0;
    auto sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double mean = total / 2.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) {
        res.p_value = 1.0;
        return res;
    }
    const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return res;
}

}  // namespace censnv
