#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "censnv/error.hpp"

namespace censnv {

enum class LossKind { EpsNV, NVC, MSE, EpsCP, EpsRP };

inline std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::EpsNV: return "eps-nv";
        case LossKind::NVC: return "nvc";
        case LossKind::MSE: return "mse";
        case LossKind::EpsCP: return "eps-cp";
        case LossKind::EpsRP: return "eps-rp";
    }
    return "unknown";
}

/**
 * Operational cost selector.
 *
 * alpha is the critical ratio c_u / (c_u + c_o). For EpsNV the zero-cost band
 * is [s + eps2, s + eps1]. The pricing (EpsCP) and replacement (EpsRP) costs
 * use eps1 as their single insensitivity width and c1 / c2 as unit costs.
 */
struct LossSpec {
    LossKind kind = LossKind::NVC;
    double alpha = 0.5;
    double eps1 = 0.0;
    double eps2 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;

    static LossSpec eps_nv(double alpha, double eps1, double eps2) {
        return {LossKind::EpsNV, alpha, eps1, eps2, 0.0, 0.0};
    }
    static LossSpec nvc(double alpha) { return {LossKind::NVC, alpha, 0.0, 0.0, 0.0, 0.0}; }
    static LossSpec mse() { return {LossKind::MSE, 0.5, 0.0, 0.0, 0.0, 0.0}; }
    static LossSpec eps_cp(double c1, double c2, double eps) {
        return {LossKind::EpsCP, 0.5, eps, 0.0, c1, c2};
    }
    static LossSpec eps_rp(double c1, double c2, double eps) {
        return {LossKind::EpsRP, 0.5, eps, 0.0, c1, c2};
    }

    // Throws ConfigError when the parameters violate the invariants of `kind`.
    void validate() const {
        auto fail = [&](const std::string& msg) {
            throw ConfigError(std::string(to_string(kind)) + ": " + msg);
        };
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(alpha) || !finite(eps1) || !finite(eps2) || !finite(c1) || !finite(c2)) {
            fail("non-finite parameter");
        }
        switch (kind) {
            case LossKind::EpsNV:
                if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0,1)");
                if (!(eps2 >= 0.0)) fail("eps2 must be >= 0");
                if (!(eps1 > eps2)) fail("eps1 must be strictly greater than eps2");
                break;
            case LossKind::NVC:
                if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0,1)");
                if (eps1 != 0.0 || eps2 != 0.0) fail("eps1 and eps2 must be 0");
                break;
            case LossKind::MSE:
                if (eps1 != 0.0 || eps2 != 0.0) fail("eps1 and eps2 must be 0");
                break;
            case LossKind::EpsCP:
                if (!(eps1 > 0.0)) fail("eps must be > 0");
                if (!(c1 > 0.0 && c2 > 0.0)) fail("c1 and c2 must be > 0");
                break;
            case LossKind::EpsRP:
                if (!(eps1 > 0.0)) fail("eps must be > 0");
                if (!(c1 > 0.0)) fail("c1 must be > 0");
                if (!(c2 > c1)) fail("c2 must be strictly greater than c1");
                break;
        }
    }
};

// Per-sample loss value and its derivative with respect to the decision y.
struct LossEval {
    double value = 0.0;
    double subgrad = 0.0;
};

namespace detail {

inline double pos(double v) { return v > 0.0 ? v : 0.0; }

inline LossEval eps_nv(double s, double y, double alpha, double eps1, double eps2) {
    const double over = y - s - eps1;
    const double under = s + eps2 - y;
    LossEval out;
    out.value = (1.0 - alpha) * pos(over) + alpha * pos(under);
    // Kinks (y == s + eps1, y == s + eps2) take subgradient 0.
    if (over > 0.0) {
        out.subgrad = 1.0 - alpha;
    } else if (under > 0.0) {
        out.subgrad = -alpha;
    }
    return out;
}

inline LossEval nvc(double s, double y, double alpha) {
    LossEval out;
    if (y > s) {
        out.value = (1.0 - alpha) * (y - s);
        out.subgrad = 1.0 - alpha;
    } else if (y < s) {
        out.value = alpha * (s - y);
        out.subgrad = -alpha;
    }
    return out;
}

inline LossEval mse(double s, double y) {
    const double r = y - s;
    return {r * r, 2.0 * r};
}

inline LossEval eps_cp(double s, double y, double c1, double c2, double eps) {
    LossEval out;
    if (y < s) {
        out.value = c2 * (s - y);
        out.subgrad = -c2;
    } else if (y > s + eps) {
        out.value = c1 * (y - s - eps);
        out.subgrad = c1;
    }
    return out;
}

inline LossEval eps_rp(double s, double y, double c1, double c2, double eps) {
    const double w = std::exp(-s);
    double v = 0.0;
    if (y - s - eps > 0.0) v += c2 * w;
    if (s + eps - y > 0.0) v += c1 * w;
    return {v, 0.0};
}

}  // namespace detail

inline LossEval eval_eps_nv(double s, double y, const LossSpec& spec) {
    if (spec.kind != LossKind::EpsNV) throw ConfigError("eval_eps_nv: spec kind is not eps-nv");
    spec.validate();
    return detail::eps_nv(s, y, spec.alpha, spec.eps1, spec.eps2);
}

inline LossEval eval_nvc(double s, double y, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("nvc: alpha must lie in (0,1)");
    return detail::nvc(s, y, alpha);
}

inline LossEval eval_mse(double s, double y) { return detail::mse(s, y); }

inline LossEval eval_eps_cp(double s, double y, const LossSpec& spec) {
    if (spec.kind != LossKind::EpsCP) throw ConfigError("eval_eps_cp: spec kind is not eps-cp");
    spec.validate();
    return detail::eps_cp(s, y, spec.c1, spec.c2, spec.eps1);
}

inline LossEval eval_eps_rp(double s, double y, const LossSpec& spec) {
    if (spec.kind != LossKind::EpsRP) throw ConfigError("eval_eps_rp: spec kind is not eps-rp");
    spec.validate();
    return detail::eps_rp(s, y, spec.c1, spec.c2, spec.eps1);
}

// Unchecked dispatch for hot loops; call spec.validate() once beforehand.
inline LossEval evaluate(const LossSpec& spec, double s, double y) {
    switch (spec.kind) {
        case LossKind::EpsNV: return detail::eps_nv(s, y, spec.alpha, spec.eps1, spec.eps2);
        case LossKind::NVC: return detail::nvc(s, y, spec.alpha);
        case LossKind::MSE: return detail::mse(s, y);
        case LossKind::EpsCP: return detail::eps_cp(s, y, spec.c1, spec.c2, spec.eps1);
        case LossKind::EpsRP: return detail::eps_rp(s, y, spec.c1, spec.c2, spec.eps1);
    }
    return {};
}

// Sample mean of the per-row loss.
inline double mean_loss(const LossSpec& spec, std::span<const double> targets,
                        std::span<const double> decisions) {
    if (targets.size() != decisions.size()) {
        throw InputError("mean_loss: targets and decisions differ in length");
    }
    if (targets.empty()) throw InputError("mean_loss: empty input");
    spec.validate();
    double acc = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) acc += evaluate(spec, targets[i], decisions[i]).value;
    return acc / static_cast<double>(targets.size());
}

// alpha v (1 - alpha)
inline double max_weight(double alpha) { return std::max(alpha, 1.0 - alpha); }
// alpha ^ (1 - alpha)
inline double min_weight(double alpha) { return std::min(alpha, 1.0 - alpha); }

// Tight sup of the eps-NV cost over s, y in [0, d_max].
inline double uniform_bound(const LossSpec& spec, double d_max) {
    if (spec.kind != LossKind::EpsNV) throw ConfigError("uniform_bound: only defined for eps-nv");
    spec.validate();
    if (!(d_max > 0.0)) throw ConfigError("uniform_bound: d_max must be > 0");
    return max_weight(spec.alpha) * (d_max + spec.eps2);
}

// Lipschitz constant of the cost in the decision.
inline double lipschitz_constant(const LossSpec& spec) {
    if (spec.kind != LossKind::EpsNV && spec.kind != LossKind::NVC) {
        throw ConfigError("lipschitz_constant: only defined for eps-nv and nvc");
    }
    spec.validate();
    return max_weight(spec.alpha);
}

}  // namespace censnv
