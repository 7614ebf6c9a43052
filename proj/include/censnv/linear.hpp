#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/loss.hpp"
#include "censnv/lp_oracle.hpp"
#include "censnv/training.hpp"

namespace censnv {

// y = x'theta; theta[0] multiplies the constant feature.
struct LinearModel {
    std::vector<double> theta;

    double predict(std::span<const double> x) const {
        if (x.size() != theta.size()) {
            throw InputError("predict: expected " + std::to_string(theta.size()) + " features, got " +
                             std::to_string(x.size()));
        }
        double y = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) y += x[j] * theta[j];
        return y;
    }

    std::vector<double> predict(const Dataset& data) const {
        std::vector<double> out;
        out.reserve(data.size());
        for (const auto& r : data.rows) out.push_back(predict(r.features));
        return out;
    }

    bool operator==(const LinearModel&) const = default;
};

inline double predict(const LinearModel& model, std::span<const double> x) { return model.predict(x); }

inline bool is_trainable(LossKind k) { return k == LossKind::EpsNV || k == LossKind::NVC || k == LossKind::MSE; }

namespace detail {

inline double row_dot(const double* x, const std::vector<double>& theta) {
    double y = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) y += x[j] * theta[j];
    return y;
}

inline double mean_loss_rows(const LossSpec& spec, const std::vector<double>& x, const std::vector<double>& s,
                             const std::vector<std::size_t>& rows, const std::vector<double>& theta) {
    const std::size_t p = theta.size();
    double acc = 0.0;
    for (std::size_t i : rows) acc += evaluate(spec, s[i], row_dot(&x[i * p], theta)).value;
    return acc / static_cast<double>(rows.size());
}

}  // namespace detail

/**
 * Mini-batch (sub)gradient descent from theta = 0.
 *
 * Training rows are reshuffled every epoch. With lambda > 0 each step adds
 * 2 lambda theta_j for j >= 1 (the intercept is not penalized). Returns the
 * snapshot with the best monitored loss.
 */
inline std::pair<LinearModel, TrainTrace> fit_gd(const Dataset& data, const LossSpec& spec, const TrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!is_trainable(spec.kind)) throw ConfigError("fit_gd: cannot train with " + std::string(to_string(spec.kind)));
    spec.validate();
    cfg.validate();
    const std::vector<double> x = detail::pack_features(data);
    const std::vector<double> s = data.sales();
    const std::size_t p = data.dim();

    std::mt19937_64 rng(cfg.seed);
    const TrainValSplit split = split_train_val(data.size(), cfg.val_fraction, cfg.shuffle, rng);
    if (cfg.batch_size > split.train.size()) {
        throw ConfigError("batch_size " + std::to_string(cfg.batch_size) + " exceeds the " +
                          std::to_string(split.train.size()) + " training rows");
    }

    std::vector<double> theta(p, 0.0);
    std::vector<double> best = theta;
    std::vector<double> grad(p, 0.0);
    Stepper stepper(cfg.optimizer, cfg.eta, p);
    EarlyStopper stopper(cfg.patience, cfg.tolerance, cfg.baseline);
    std::vector<std::size_t> order = split.train;
    TrainTrace trace;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
        std::size_t batch = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                const double* xi = &x[i * p];
                const LossEval e = evaluate(spec, s[i], detail::row_dot(xi, theta));
                batch_loss += e.value;
                if (e.subgrad != 0.0) {
                    for (std::size_t j = 0; j < p; ++j) grad[j] += e.subgrad * xi[j];
                }
            }
            if (!std::isfinite(batch_loss)) {
                throw DivergenceError("fit_gd: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                          std::to_string(batch),
                                      epoch, batch);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t j = 0; j < p; ++j) grad[j] *= inv;
            if (cfg.lambda > 0.0) {
                for (std::size_t j = 1; j < p; ++j) grad[j] += 2.0 * cfg.lambda * theta[j];
            }
            stepper.step(theta, grad);
        }

        const double train_loss = detail::mean_loss_rows(spec, x, s, split.train, theta);
        double monitor = train_loss;
        trace.train_loss.push_back(train_loss);
        if (!split.val.empty()) {
            monitor = detail::mean_loss_rows(spec, x, s, split.val, theta);
            trace.val_loss.push_back(monitor);
        }
        if (!std::isfinite(monitor) || !std::isfinite(train_loss)) {
            throw DivergenceError("fit_gd: non-finite loss at epoch " + std::to_string(epoch), epoch, 0);
        }
        if (stopper.observe(monitor)) best = theta;
        if (stopper.should_stop(monitor, trace.stop_reason)) break;
    }
    if (trace.stop_reason.empty()) trace.stop_reason = "max_epochs";
    trace.best_epoch = stopper.best_epoch();
    trace.best_monitor = stopper.best();
    trace.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {LinearModel{std::move(best)}, std::move(trace)};
}

// Ordinary least squares via column-pivoted QR.
inline LinearModel fit_mse_closed_form(const Dataset& data) {
    data.check_rectangular();
    const std::size_t n = data.size();
    const std::size_t p = data.dim();
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd s(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) X(i, j) = data.rows[i].features[j];
        s(i) = data.rows[i].sale;
    }
    const Eigen::MatrixXd gram = X.transpose() * X;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || smax / smin > 1e12) {
        throw InputError("fit_mse_closed_form: design matrix is rank deficient (condition number of X'X above 1e12)");
    }
    const Eigen::VectorXd theta = X.colPivHouseholderQr().solve(s);
    return LinearModel{std::vector<double>(theta.data(), theta.data() + theta.size())};
}

inline constexpr std::size_t kDefaultLpRowCap = 2000;

// Exact eps-NV minimizer through the LP oracle.
inline LinearModel fit_lp(const Dataset& data, const LossSpec& spec, std::size_t max_rows = kDefaultLpRowCap) {
    if (data.size() > max_rows) {
        throw CapacityError("fit_lp: " + std::to_string(data.size()) + " rows exceed the LP cap of " +
                            std::to_string(max_rows) + "; use fit_gd instead");
    }
    const LPSolution sol = solve_eps_nv_lp(data, spec);
    if (sol.status != LPStatus::Optimal) {
        throw Error("fit_lp: simplex stopped with status " + std::string(to_string(sol.status)));
    }
    return LinearModel{sol.theta};
}

// Text form: p on the first line, then one coefficient per line.
inline void write_model(std::ostream& os, const LinearModel& m) {
    os << m.theta.size() << '\n';
    for (double v : m.theta) os << format_double(v) << '\n';
}

inline LinearModel read_linear_model(std::istream& is) {
    std::size_t p = 0;
    if (!(is >> p) || p == 0) throw ParseError("linear model: missing or invalid dimension", 1);
    LinearModel m;
    m.theta.resize(p);
    std::string tok;
    for (std::size_t j = 0; j < p; ++j) {
        if (!(is >> tok)) throw ParseError("linear model: expected " + std::to_string(p) + " coefficients", j + 2);
        const auto v = detail::parse_double(tok);
        if (!v || !std::isfinite(*v)) throw ParseError("linear model: bad coefficient '" + tok + "'", j + 2);
        m.theta[j] = *v;
    }
    return m;
}

inline void save_model(const LinearModel& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_model(out, m);
    if (!out) throw IoError("write failed: " + path.string());
}

inline LinearModel load_linear_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return read_linear_model(in);
}

}  // namespace censnv
