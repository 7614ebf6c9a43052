#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"

namespace censnv {

enum class Optimizer { Sgd, Adam };

/**
 * Mini-batch training settings shared by the linear and neural learners.
 *
 * Defaults: 500 epochs, 25% validation hold-out,
 * patience 30, tolerance 1e-7, baseline 1e-6. val_fraction = 0 disables the
 * hold-out; early stopping then monitors the training loss.
 */
struct TrainConfig {
    double eta = 0.01;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 500;
    double val_fraction = 0.25;
    std::size_t patience = 30;
    double tolerance = 1e-7;
    double baseline = 1e-6;
    double lambda = 0.0;
    std::uint64_t seed = 123;
    bool shuffle = true;
    Optimizer optimizer = Optimizer::Sgd;

    void validate() const {
        if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be > 0");
        if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
        if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
        if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in [0,1)");
        if (patience > max_epochs) throw ConfigError("patience must not exceed max_epochs");
        if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be >= 0");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
    }
};

struct TrainTrace {
    std::vector<double> train_loss;
    std::vector<double> val_loss;   // empty when val_fraction == 0
    std::size_t best_epoch = 0;     // 1-based epoch of the returned snapshot
    double best_monitor = std::numeric_limits<double>::infinity();
    double fit_seconds = 0.0;
    std::string stop_reason;

    bool operator==(const TrainTrace& o) const {
        // Timing is not part of the determinism contract.
        return train_loss == o.train_loss && val_loss == o.val_loss && best_epoch == o.best_epoch &&
               best_monitor == o.best_monitor && stop_reason == o.stop_reason;
    }
};

struct TrainValSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

// Shuffled (if requested) hold-out split; the validation part is the tail.
inline TrainValSplit split_train_val(std::size_t n, double val_fraction, bool shuffle, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (shuffle) std::shuffle(idx.begin(), idx.end(), rng);
    TrainValSplit out;
    if (val_fraction <= 0.0) {
        out.train = std::move(idx);
        return out;
    }
    if (n < 2) throw InputError("need at least 2 rows for a validation split");
    auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    out.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_val));
    out.val.assign(idx.end() - static_cast<std::ptrdiff_t>(n_val), idx.end());
    return out;
}

// Patience-based stopping on a monitored loss; remembers the best epoch.
class EarlyStopper {
public:
    EarlyStopper(std::size_t patience, double tolerance, double baseline)
        : patience_(patience), tolerance_(tolerance), baseline_(baseline) {}

    // Returns true when `monitor` is a new best (improvement > tolerance).
    bool observe(double monitor) {
        ++epoch_;
        if (monitor < best_ - tolerance_) {
            best_ = monitor;
            best_epoch_ = epoch_;
            wait_ = 0;
            return true;
        }
        ++wait_;
        return false;
    }

    bool should_stop(double monitor, std::string& reason) const {
        if (monitor < baseline_) {
            reason = "baseline";
            return true;
        }
        if (wait_ >= patience_) {
            reason = "patience";
            return true;
        }
        return false;
    }

    double best() const { return best_; }
    std::size_t best_epoch() const { return best_epoch_; }

private:
    std::size_t patience_;
    double tolerance_;
    double baseline_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t best_epoch_ = 0;
    std::size_t epoch_ = 0;
    std::size_t wait_ = 0;
};

// Applies one update to a flat parameter vector. Adam: beta1 0.9, beta2 0.999, eps 1e-7.
class Stepper {
public:
    Stepper(Optimizer opt, double eta, std::size_t n_params) : opt_(opt), eta_(eta) {
        if (opt_ == Optimizer::Adam) {
            m_.assign(n_params, 0.0);
            v_.assign(n_params, 0.0);
        }
    }

    void step(std::span<double> params, std::span<const double> grad) {
        if (opt_ == Optimizer::Sgd) {
            for (std::size_t j = 0; j < params.size(); ++j) params[j] -= eta_ * grad[j];
            return;
        }
        constexpr double b1 = 0.9;
        constexpr double b2 = 0.999;
        constexpr double eps = 1e-7;
        ++t_;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t j = 0; j < params.size(); ++j) {
            m_[j] = b1 * m_[j] + (1.0 - b1) * grad[j];
            v_[j] = b2 * v_[j] + (1.0 - b2) * grad[j] * grad[j];
            params[j] -= eta_ * (m_[j] / c1) / (std::sqrt(v_[j] / c2) + eps);
        }
    }

private:
    Optimizer opt_;
    double eta_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

namespace detail {

// Row-major n x p copy of the feature rows.
inline std::vector<double> pack_features(const Dataset& data) {
    data.check_rectangular();
    const std::size_t p = data.dim();
    std::vector<double> x;
    x.reserve(data.size() * p);
    for (const auto& r : data.rows) x.insert(x.end(), r.features.begin(), r.features.end());
    return x;
}

}  // namespace detail

inline std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

}  // namespace censnv
