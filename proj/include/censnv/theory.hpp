#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/linear.hpp"
#include "censnv/loss.hpp"
#include "censnv/mlp.hpp"

namespace censnv {

namespace detail {

inline void check_n(std::size_t n, const char* who) {
    if (n == 0) throw ConfigError(std::string(who) + ": n must be >= 1");
}

inline void check_prob(double v, const char* who) {
    if (!(v > 0.0 && v < 1.0)) throw ConfigError(std::string(who) + ": probability must lie in (0,1)");
}

}  // namespace detail

// Uniform stability of the unregularized linear eps-NV learner.
inline double stability_xi(std::size_t n, std::size_t p, double alpha, double d_max, double eps2) {
    detail::check_n(n, "stability_xi");
    const double hi = max_weight(alpha), lo = min_weight(alpha);
    return static_cast<double>(p) / static_cast<double>(n) * hi * hi / lo * (d_max + eps2);
}

// Bound on test minus train eps-NV cost holding with probability 1 - delta.
inline double linear_generalization_bound(std::size_t n, std::size_t p, double alpha, double d_max, double eps2,
                                          double delta) {
    detail::check_n(n, "linear_generalization_bound");
    detail::check_prob(delta, "linear_generalization_bound");
    const double r = max_weight(alpha) / min_weight(alpha);
    const double nn = static_cast<double>(n), pp = static_cast<double>(p);
    const double tail = std::sqrt(std::log(1.0 / delta) / (2.0 * nn));
    return max_weight(alpha) * (d_max + eps2) * (2.0 * pp * r / nn + (4.0 * pp * r + 1.0) * tail);
}

// Uniform stability with the L2 penalty lambda and feature bound x_max.
inline double regularized_stability_xi(std::size_t n, std::size_t p, double alpha, double x_max, double lambda) {
    detail::check_n(n, "regularized_stability_xi");
    if (!(lambda > 0.0)) throw ConfigError("regularized_stability_xi: lambda must be > 0");
    const double w = max_weight(alpha);
    return w * w * x_max * x_max * static_cast<double>(p) / (2.0 * static_cast<double>(n) * lambda);
}

inline double regularized_generalization_bound(std::size_t n, std::size_t p, double alpha, double x_max,
                                               double lambda, double d_max, double eps2, double delta) {
    detail::check_n(n, "regularized_generalization_bound");
    detail::check_prob(delta, "regularized_generalization_bound");
    if (!(lambda > 0.0)) throw ConfigError("regularized_generalization_bound: lambda must be > 0");
    const double w = max_weight(alpha);
    const double nn = static_cast<double>(n), pp = static_cast<double>(p);
    const double tail = std::sqrt(std::log(2.0 / delta) / (2.0 * nn));
    const double core = w * w * x_max * x_max;
    return core * pp / (nn * lambda) + 2.0 * core * pp / lambda * tail + (d_max + eps2) * w * tail;
}

/**
 * Generalization bound for the network trained by K-pass SGD, with the
 * unspecified absolute constant set to c. Linear in c, so
 * `nn_generalization_bound(1, ...)` is the unit used for calibration.
 */
inline double nn_generalization_bound(double c, double alpha, double eta, std::size_t n, std::size_t k_passes,
                                      double d_max, double rho) {
    detail::check_n(n, "nn_generalization_bound");
    detail::check_prob(rho, "nn_generalization_bound");
    const double w = max_weight(alpha);
    const double nn = static_cast<double>(n), kk = static_cast<double>(k_passes);
    const double sgd = eta * std::sqrt(nn * kk) + 2.0 * kk * eta;
    return c * w * w * sgd * std::log(nn) * std::log(nn / rho) + c * w * d_max * std::sqrt(std::log(1.0 / rho) / nn);
}

// Smallest c for which the bound covers an observed |test - train| gap.
inline double calibrate_nn_constant(double observed_gap, double alpha, double eta, std::size_t n,
                                    std::size_t k_passes, double d_max, double rho) {
    return std::abs(observed_gap) / nn_generalization_bound(1.0, alpha, eta, n, k_passes, d_max, rho);
}

/**
 * Random instances for the stability probe: x = (1, u) with u ~ U[0,1] and
 * s = clip(0.3 + 0.4 u + N(0, 0.1^2), 0, 1), so targets live in [0, 1].
 */
inline Dataset make_probe_dataset(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> e(0.0, 0.1);
    Dataset d;
    d.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Row r;
        const double x = u(rng);
        r.features = {1.0, x};
        r.sale = std::clamp(0.3 + 0.4 * x + e(rng), 0.0, 1.0);
        r.demand = r.sale;
        d.rows.push_back(std::move(r));
    }
    return d;
}

struct ProbePoint {
    double x = 0.0;
    double s = 0.0;
};

// Regular grid over [0,1]^2 in (feature, target), nx * ns points.
inline std::vector<ProbePoint> probe_grid(std::size_t nx = 20, std::size_t ns = 10) {
    if (nx < 2 || ns < 2) throw ConfigError("probe_grid: need at least 2 points per axis");
    std::vector<ProbePoint> g;
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ns; ++j)
            g.push_back({static_cast<double>(i) / static_cast<double>(nx - 1),
                         static_cast<double>(j) / static_cast<double>(ns - 1)});
    return g;
}

/**
 * max over i and probe points z of |L(theta_S, z) - L(theta_{S minus i}, z)|,
 * with every model fitted exactly by the LP path. Features are (1, z.x).
 */
inline double loo_supremum(const Dataset& data, const LossSpec& spec, const std::vector<ProbePoint>& grid) {
    if (data.size() < 2) throw InputError("loo_supremum: need at least 2 rows");
    if (data.dim() != 2) throw InputError("loo_supremum: probe datasets have 2 features");
    const auto full = fit_lp(data, spec);
    auto loss_at = [&](const LinearModel& m, const ProbePoint& z) {
        return evaluate(spec, z.s, m.theta[0] + m.theta[1] * z.x).value;
    };
    std::vector<double> base(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) base[k] = loss_at(full, grid[k]);
    double sup = 0.0;
    std::vector<std::size_t> keep;
    keep.reserve(data.size() - 1);
    for (std::size_t i = 0; i < data.size(); ++i) {
        keep.clear();
        for (std::size_t j = 0; j < data.size(); ++j)
            if (j != i) keep.push_back(j);
        const auto loo = fit_lp(data.subset(keep), spec);
        for (std::size_t k = 0; k < grid.size(); ++k) sup = std::max(sup, std::abs(loss_at(loo, grid[k]) - base[k]));
    }
    return sup;
}

struct StabilityInstance {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double supremum = 0.0;
    double xi = 0.0;
    bool holds = false;
};

struct StabilitySummary {
    std::vector<StabilityInstance> instances;
    std::vector<std::size_t> sizes;
    std::vector<double> mean_supremum;  // aligned with sizes
    bool all_hold = true;
    bool decreasing = true;  // seed-mean strictly decreases along sizes
};

// Runs loo_supremum over `datasets` random instances at each size.
inline StabilitySummary stability_probe(const std::vector<std::size_t>& sizes, std::size_t datasets,
                                        const LossSpec& spec, std::uint64_t seed,
                                        const std::vector<ProbePoint>& grid = probe_grid()) {
    if (spec.kind != LossKind::EpsNV) throw ConfigError("stability_probe: needs an eps-nv loss");
    if (sizes.empty() || datasets == 0) throw ConfigError("stability_probe: empty probe plan");
    StabilitySummary out;
    out.sizes = sizes;
    for (std::size_t n : sizes) {
        double acc = 0.0;
        const double xi = stability_xi(n, 2, spec.alpha, 1.0, spec.eps2);
        for (std::size_t k = 0; k < datasets; ++k) {
            const std::uint64_t s = seed + 1000003ULL * n + k;
            std::mt19937_64 rng(s);
            const auto data = make_probe_dataset(n, rng);
            StabilityInstance inst{n, s, loo_supremum(data, spec, grid), xi, false};
            inst.holds = inst.supremum <= xi;
            out.all_hold = out.all_hold && inst.holds;
            acc += inst.supremum;
            out.instances.push_back(inst);
        }
        out.mean_supremum.push_back(acc / static_cast<double>(datasets));
    }
    for (std::size_t k = 1; k < out.mean_supremum.size(); ++k)
        out.decreasing = out.decreasing && out.mean_supremum[k] < out.mean_supremum[k - 1];
    return out;
}

struct UasInstance {
    std::uint64_t seed = 0;
    std::size_t swap_index = 0;
    double distance = 0.0;
    double bound = 0.0;
    bool holds = false;
};

/**
 * Parameter distances of K-pass SGD networks under one-row swaps. For each
 * seed a probe dataset of n rows is drawn, then `swaps` rows are replaced
 * in turn by fresh draws from the same distribution.
 */
inline std::vector<UasInstance> uas_study(std::size_t n, std::size_t swaps, const std::vector<std::uint64_t>& seeds,
                                          const LossSpec& spec, double eta, std::size_t k_passes,
                                          const std::vector<std::size_t>& hidden = {6, 4}) {
    if (n < 2 || swaps == 0 || seeds.empty()) throw ConfigError("uas_study: empty probe plan");
    if (hidden.size() != 2) throw ConfigError("uas_study: expected two hidden layer widths");
    const std::vector<std::size_t> arch{2, hidden[0], hidden[1], 1};
    const double bound = uas_bound(spec.alpha, eta, n, k_passes);
    std::vector<UasInstance> out;
    for (std::uint64_t seed : seeds) {
        std::mt19937_64 rng(seed);
        const auto data = make_probe_dataset(n, rng);
        const auto fresh = make_probe_dataset(swaps, rng);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        TrainConfig cfg;
        cfg.eta = eta;
        cfg.seed = seed;
        cfg.optimizer = Optimizer::Sgd;
        for (std::size_t k = 0; k < swaps; ++k) {
            const std::size_t i = pick(rng);
            const double d = uas_probe(data, spec, arch, cfg, i, k_passes, fresh.rows[k]);
            out.push_back({seed, i, d, bound, d <= bound});
        }
    }
    return out;
}

}  // namespace censnv
