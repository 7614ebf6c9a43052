#pragma once

#include <array>
#include <chrono>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/linear.hpp"
#include "censnv/loss.hpp"
#include "censnv/mlp.hpp"
#include "censnv/training.hpp"

namespace censnv {

enum class LearnerKind { LrMse, LrNvc, LrEnvc, LrEnvcR, NnMse, NnNvc, NnEnvc };

inline constexpr std::array<LearnerKind, 7> kAllLearners{LearnerKind::LrMse,  LearnerKind::LrNvc, LearnerKind::LrEnvc,
                                                         LearnerKind::LrEnvcR, LearnerKind::NnMse, LearnerKind::NnNvc,
                                                         LearnerKind::NnEnvc};

inline std::string_view to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::LrMse: return "LR-MSE";
        case LearnerKind::LrNvc: return "LR-NVC";
        case LearnerKind::LrEnvc: return "LR-eNVC";
        case LearnerKind::LrEnvcR: return "LR-eNVC-R";
        case LearnerKind::NnMse: return "NN-MSE";
        case LearnerKind::NnNvc: return "NN-NVC";
        case LearnerKind::NnEnvc: return "NN-eNVC";
    }
    return "?";
}

inline LearnerKind parse_learner(std::string_view name) {
    for (auto k : kAllLearners)
        if (to_string(k) == name) return k;
    throw ConfigError("unknown algorithm '" + std::string(name) +
                      "' (expected one of LR-MSE, LR-NVC, LR-eNVC, LR-eNVC-R, NN-MSE, NN-NVC, NN-eNVC)");
}

inline bool is_neural(LearnerKind k) {
    return k == LearnerKind::NnMse || k == LearnerKind::NnNvc || k == LearnerKind::NnEnvc;
}
inline bool uses_eps(LearnerKind k) {
    return k == LearnerKind::LrEnvc || k == LearnerKind::LrEnvcR || k == LearnerKind::NnEnvc;
}
inline bool uses_lambda(LearnerKind k) { return k == LearnerKind::LrEnvcR; }
inline bool is_mse(LearnerKind k) { return k == LearnerKind::LrMse || k == LearnerKind::NnMse; }

// The plain newsvendor baseline of the same family.
inline LearnerKind nvc_baseline(LearnerKind k) { return is_neural(k) ? LearnerKind::NnNvc : LearnerKind::LrNvc; }
inline LearnerKind mse_baseline(LearnerKind k) { return is_neural(k) ? LearnerKind::NnMse : LearnerKind::LrMse; }

struct Hyperparams {
    double eta = 0.01;
    double lambda = 0.0;
    std::size_t batch_size = 64;
    std::size_t units1 = 6;
    std::size_t units2 = 4;
    double eps1 = 0.0;
    double eps2 = 0.0;

    bool operator==(const Hyperparams&) const = default;
};

inline void to_json(nlohmann::json& j, const Hyperparams& h) {
    j = nlohmann::json{{"eta", h.eta},       {"lambda", h.lambda}, {"batch_size", h.batch_size},
                       {"units1", h.units1}, {"units2", h.units2}, {"eps1", h.eps1},
                       {"eps2", h.eps2}};
}

inline void from_json(const nlohmann::json& j, Hyperparams& h) {
    Hyperparams d;
    h.eta = j.value("eta", d.eta);
    h.lambda = j.value("lambda", d.lambda);
    h.batch_size = j.value("batch_size", d.batch_size);
    h.units1 = j.value("units1", d.units1);
    h.units2 = j.value("units2", d.units2);
    h.eps1 = j.value("eps1", d.eps1);
    h.eps2 = j.value("eps2", d.eps2);
}

// Training loss of a learner at critical ratio alpha. Eps learners with a
// zero band train on the plain newsvendor cost, the same function.
inline LossSpec loss_for(LearnerKind k, double alpha, double eps1 = 0.0, double eps2 = 0.0) {
    if (is_mse(k)) return LossSpec::mse();
    if (uses_eps(k) && (eps1 != 0.0 || eps2 != 0.0)) return LossSpec::eps_nv(alpha, eps1, eps2);
    return LossSpec::nvc(alpha);
}

/**
 * Settings shared by every fit in a run. Networks train with `nn_optimizer`;
 * under Adam the step size is `nn_learning_rate` and Hyperparams::eta is
 * ignored.
 */
struct LearnerOptions {
    TrainConfig base;
    Optimizer nn_optimizer = Optimizer::Adam;
    double nn_learning_rate = 0.001;
    bool mse_closed_form = true;  // LR-MSE by least squares instead of GD
};

inline void to_json(nlohmann::json& j, const LearnerOptions& o) {
    j = nlohmann::json{{"max_epochs", o.base.max_epochs},
                       {"val_fraction", o.base.val_fraction},
                       {"patience", o.base.patience},
                       {"tolerance", o.base.tolerance},
                       {"baseline", o.base.baseline},
                       {"seed", o.base.seed},
                       {"shuffle", o.base.shuffle},
                       {"nn_optimizer", std::string(to_string(o.nn_optimizer))},
                       {"nn_learning_rate", o.nn_learning_rate},
                       {"mse_closed_form", o.mse_closed_form}};
}

inline void from_json(const nlohmann::json& j, LearnerOptions& o) {
    LearnerOptions d;
    o.base.max_epochs = j.value("max_epochs", d.base.max_epochs);
    o.base.val_fraction = j.value("val_fraction", d.base.val_fraction);
    o.base.patience = j.value("patience", d.base.patience);
    o.base.tolerance = j.value("tolerance", d.base.tolerance);
    o.base.baseline = j.value("baseline", d.base.baseline);
    o.base.seed = j.value("seed", d.base.seed);
    o.base.shuffle = j.value("shuffle", d.base.shuffle);
    const auto opt = j.value("nn_optimizer", std::string("adam"));
    if (opt == "adam") {
        o.nn_optimizer = Optimizer::Adam;
    } else if (opt == "sgd") {
        o.nn_optimizer = Optimizer::Sgd;
    } else {
        throw ConfigError("nn_optimizer must be 'sgd' or 'adam', got '" + opt + "'");
    }
    o.nn_learning_rate = j.value("nn_learning_rate", d.nn_learning_rate);
    o.mse_closed_form = j.value("mse_closed_form", d.mse_closed_form);
}

using FittedModel = std::variant<LinearModel, MLPModel>;

inline std::vector<double> predict(const FittedModel& m, const Dataset& data) {
    if (const auto* lin = std::get_if<LinearModel>(&m)) return lin->predict(data);
    return censnv::predict(std::get<MLPModel>(m), data);
}

struct FitResult {
    FittedModel model;
    TrainTrace trace;  // empty epochs for the closed-form path
    double fit_seconds = 0.0;
};

inline TrainConfig train_config_for(LearnerKind k, const Hyperparams& hp, const LearnerOptions& opts) {
    TrainConfig cfg = opts.base;
    cfg.batch_size = hp.batch_size;
    cfg.lambda = uses_lambda(k) ? hp.lambda : 0.0;
    if (is_neural(k)) {
        cfg.optimizer = opts.nn_optimizer;
        cfg.eta = opts.nn_optimizer == Optimizer::Adam ? opts.nn_learning_rate : hp.eta;
    } else {
        cfg.optimizer = Optimizer::Sgd;
        cfg.eta = hp.eta;
    }
    return cfg;
}

inline std::vector<std::size_t> architecture_for(const Hyperparams& hp, std::size_t p) {
    return {p, hp.units1, hp.units2, 1};
}

// Fits one learner on (scaled) training data; fit_seconds covers the fit call only.
inline FitResult fit_learner(LearnerKind k, const Dataset& train, double alpha, const Hyperparams& hp,
                             const LearnerOptions& opts) {
    const auto spec = loss_for(k, alpha, hp.eps1, hp.eps2);
    spec.validate();
    if (uses_eps(k) && !(hp.eps1 > hp.eps2 || (hp.eps1 == 0.0 && hp.eps2 == 0.0))) {
        throw ConfigError(std::string(to_string(k)) + ": eps1 must exceed eps2");
    }
    if (k == LearnerKind::LrMse && opts.mse_closed_form) {
        const auto t0 = std::chrono::steady_clock::now();
        auto m = fit_mse_closed_form(train);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        TrainTrace trace;
        trace.fit_seconds = dt;
        trace.stop_reason = "closed_form";
        return {std::move(m), std::move(trace), dt};
    }
    const auto cfg = train_config_for(k, hp, opts);
    if (is_neural(k)) {
        auto [m, trace] = fit_sgd(train, spec, architecture_for(hp, train.dim()), cfg);
        const double dt = trace.fit_seconds;
        return {std::move(m), std::move(trace), dt};
    }
    auto [m, trace] = fit_gd(train, spec, cfg);
    const double dt = trace.fit_seconds;
    return {std::move(m), std::move(trace), dt};
}

}  // namespace censnv
