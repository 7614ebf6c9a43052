#pragma once

#include <cmath>
#include <vector>

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/loss.hpp"
#include "censnv/simplex.hpp"

namespace censnv {

/**
 * LP form of mean eps-NV cost minimization for a linear decision rule.
 *
 * Variables, in order: theta+ (p), theta- (p), o (n), u (n), all >= 0.
 *
 *     min  (1/n) sum (1 - alpha) o_i + alpha u_i
 *     s.t.  x_i'theta - o_i <= s_i + eps1
 *          -x_i'theta - u_i <= -(s_i + eps2)
 *
 * o_i is the excess above the band, u_i the shortfall below it.
 */
inline StandardLP build_eps_nv_lp(const Dataset& data, const LossSpec& spec) {
    if (spec.kind != LossKind::EpsNV) throw ConfigError("build_eps_nv_lp: loss must be eps-nv");
    spec.validate();
    if (data.empty()) throw InputError("build_eps_nv_lp: empty dataset");
    data.check_rectangular();
    const std::size_t n = data.size();
    const std::size_t p = data.dim();

    StandardLP lp;
    lp.n_vars = 2 * p + 2 * n;
    lp.n_constraints = 2 * n;
    lp.cost.assign(lp.n_vars, 0.0);
    lp.rhs.assign(lp.n_constraints, 0.0);
    lp.constraint_matrix = DenseMatrix(lp.n_constraints, lp.n_vars);
    const double inv_n = 1.0 / static_cast<double>(n);
    const std::size_t o0 = 2 * p;
    const std::size_t u0 = 2 * p + n;
    for (std::size_t i = 0; i < n; ++i) {
        lp.cost[o0 + i] = (1.0 - spec.alpha) * inv_n;
        lp.cost[u0 + i] = spec.alpha * inv_n;
    }
    auto& A = lp.constraint_matrix;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = data.rows[i].features;
        const double s = data.rows[i].sale;
        for (std::size_t j = 0; j < p; ++j) {
            A(i, j) = x[j];
            A(i, p + j) = -x[j];
            A(n + i, j) = -x[j];
            A(n + i, p + j) = x[j];
        }
        A(i, o0 + i) = -1.0;
        A(n + i, u0 + i) = -1.0;
        lp.rhs[i] = s + spec.eps1;
        lp.rhs[n + i] = -(s + spec.eps2);
    }
    return lp;
}

struct LPSolution {
    std::vector<double> theta;
    double objective = 0.0;
    LPStatus status = LPStatus::IterationLimit;
};

// Default pivot budget: 50 (n_vars + n_constraints).
inline std::size_t default_max_iters(const StandardLP& lp) { return 50 * (lp.n_vars + lp.n_constraints); }

// Solves the eps-NV LP and recovers theta = theta+ - theta-.
inline LPSolution solve_eps_nv_lp(const Dataset& data, const LossSpec& spec) {
    const StandardLP lp = build_eps_nv_lp(data, spec);
    const SimplexResult res = solve_simplex(lp, default_max_iters(lp));
    LPSolution out;
    out.status = res.status;
    out.objective = res.objective;
    if (res.x.empty()) return out;
    const std::size_t p = data.dim();
    out.theta.resize(p);
    for (std::size_t j = 0; j < p; ++j) out.theta[j] = res.x[j] - res.x[p + j];
    return out;
}

}  // namespace censnv
