#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "censnv/error.hpp"

namespace censnv {

// Row-major dense matrix, just enough for the LP tableau.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/**
 * LP in inequality standard form:
 *
 *     minimize    cost' x
 *     subject to  constraint_matrix x <= rhs,   x >= 0.
 *
 * rhs entries may be negative; the solver handles them in phase one.
 */
struct StandardLP {
    std::vector<double> cost;
    DenseMatrix constraint_matrix;
    std::vector<double> rhs;
    std::size_t n_vars = 0;
    std::size_t n_constraints = 0;

    void check() const {
        if (cost.size() != n_vars || constraint_matrix.cols != n_vars ||
            constraint_matrix.rows != n_constraints || rhs.size() != n_constraints ||
            constraint_matrix.data.size() != n_vars * n_constraints) {
            throw InputError("StandardLP: inconsistent dimensions");
        }
    }
};

enum class LPStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline std::string_view to_string(LPStatus s) {
    switch (s) {
        case LPStatus::Optimal: return "optimal";
        case LPStatus::Infeasible: return "infeasible";
        case LPStatus::Unbounded: return "unbounded";
        case LPStatus::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

struct SimplexResult {
    LPStatus status = LPStatus::IterationLimit;
    double objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> x;
    std::size_t iterations = 0;
};

namespace detail {

// Dense tableau with the reduced-cost row stored last and the rhs column last.
class Tableau {
public:
    static constexpr double kPivotTol = 1e-11;
    static constexpr double kCostTol = 1e-10;
    // Dantzig pricing until this many consecutive degenerate pivots, then Bland.
    static constexpr std::size_t kDegenerateStreak = 50;

    Tableau(std::size_t m, std::size_t ncols) : m_(m), n_(ncols), t_((m + 1) * (ncols + 1), 0.0), basis_(m) {}

    double& at(std::size_t i, std::size_t j) { return t_[i * (n_ + 1) + j]; }
    double at(std::size_t i, std::size_t j) const { return t_[i * (n_ + 1) + j]; }
    double& rhs(std::size_t i) { return at(i, n_); }
    double rhs(std::size_t i) const { return at(i, n_); }
    double& cost(std::size_t j) { return at(m_, j); }

    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }
    std::vector<std::size_t>& basis() { return basis_; }
    const std::vector<std::size_t>& basis() const { return basis_; }

    void pivot(std::size_t pr, std::size_t pc) {
        const std::size_t w = n_ + 1;
        double* prow = &t_[pr * w];
        const double inv = 1.0 / prow[pc];
        nz_.clear();
        for (std::size_t j = 0; j < w; ++j) {
            if (prow[j] != 0.0) {
                prow[j] *= inv;
                nz_.push_back(j);
            }
        }
        prow[pc] = 1.0;
        for (std::size_t r = 0; r <= m_; ++r) {
            if (r == pr) continue;
            double* row = &t_[r * w];
            const double f = row[pc];
            if (f == 0.0) continue;
            for (std::size_t j : nz_) row[j] -= f * prow[j];
            row[pc] = 0.0;
        }
        basis_[pr] = pc;
    }

    // Runs primal simplex on the current reduced-cost row. `allowed[j]` false
    // excludes column j from entering.
    LPStatus optimize(const std::vector<char>& allowed, std::size_t max_iters, std::size_t& iters) {
        bool bland = false;
        std::size_t streak = 0;
        while (true) {
            std::size_t enter = n_;
            double best = -kCostTol;
            for (std::size_t j = 0; j < n_; ++j) {
                if (!allowed[j]) continue;
                const double d = at(m_, j);
                if (bland) {
                    if (d < -kCostTol) {
                        enter = j;
                        break;
                    }
                } else if (d < best) {
                    best = d;
                    enter = j;
                }
            }
            if (enter == n_) return LPStatus::Optimal;
            if (iters >= max_iters) return LPStatus::IterationLimit;

            std::size_t leave = m_;
            double ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = at(i, enter);
                if (a <= kPivotTol) continue;
                const double r = rhs(i) / a;
                // Ties go to the lowest basic index (Bland).
                if (leave == m_ || r < ratio - 1e-12) {
                    ratio = r;
                    leave = i;
                } else if (r <= ratio + 1e-12 && basis_[i] < basis_[leave]) {
                    ratio = std::min(ratio, r);
                    leave = i;
                }
            }
            if (leave == m_) return LPStatus::Unbounded;

            if (ratio <= 1e-12) {
                if (++streak >= kDegenerateStreak) bland = true;
            } else {
                streak = 0;
            }
            pivot(leave, enter);
            ++iters;
        }
    }

private:
    std::size_t m_;
    std::size_t n_;
    std::vector<double> t_;
    std::vector<std::size_t> basis_;
    std::vector<std::size_t> nz_;
};

}  // namespace detail

/**
 * Dense two-phase primal simplex.
 *
 * Each row gets a slack (b >= 0) or, after sign flip, a surplus. Rows with a
 * negative rhs first try a crash basis: a structural column that is nonzero
 * only in that row with the right sign becomes basic. Remaining rows get an
 * artificial variable and phase one minimizes their sum.
 *
 * Pricing is Dantzig's rule, switching to Bland's rule after a streak of
 * degenerate pivots so the method terminates.
 */
inline SimplexResult solve_simplex(const StandardLP& lp, std::size_t max_iters) {
    lp.check();
    const std::size_t m = lp.n_constraints;
    const std::size_t n = lp.n_vars;
    const DenseMatrix& A = lp.constraint_matrix;

    // Structural columns nonzero in exactly one row are crash candidates.
    std::vector<std::size_t> nnz_rows(n, 0);
    std::vector<std::size_t> only_row(n, 0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (A(i, j) != 0.0) {
                ++nnz_rows[j];
                only_row[j] = i;
            }
        }
    }

    std::vector<char> flipped(m, 0);
    std::vector<std::size_t> crash(m, n);  // n means "no crash column"
    std::vector<char> used(n, 0);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (lp.rhs[i] >= 0.0) continue;
        flipped[i] = 1;
        for (std::size_t j = 0; j < n; ++j) {
            // After flipping, the row coefficient is -A(i,j); it must be positive.
            if (!used[j] && nnz_rows[j] == 1 && only_row[j] == i && -A(i, j) > 0.0) {
                crash[i] = j;
                used[j] = 1;
                break;
            }
        }
        if (crash[i] == n) ++n_art;
    }

    const std::size_t slack0 = n;
    const std::size_t art0 = n + m;
    const std::size_t ncols = n + m + n_art;
    detail::Tableau tab(m, ncols);

    std::size_t next_art = art0;
    std::vector<char> is_art(ncols, 0);
    for (std::size_t i = 0; i < m; ++i) {
        const double sign = flipped[i] ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * A(i, j);
        tab.at(i, slack0 + i) = sign;  // slack (+1) or surplus (-1 after flip)
        tab.rhs(i) = sign * lp.rhs[i];
        if (!flipped[i]) {
            tab.basis()[i] = slack0 + i;
        } else if (crash[i] != n) {
            const double piv = tab.at(i, crash[i]);
            for (std::size_t j = 0; j <= ncols; ++j) tab.at(i, j) /= piv;
            tab.basis()[i] = crash[i];
        } else {
            tab.at(i, next_art) = 1.0;
            tab.basis()[i] = next_art;
            is_art[next_art] = 1;
            ++next_art;
        }
    }

    SimplexResult result;
    std::size_t iters = 0;
    std::vector<char> allowed(ncols, 1);

    if (n_art > 0) {
        // Phase one: minimize the sum of artificials.
        for (std::size_t j = 0; j <= ncols; ++j) tab.cost(j) = 0.0;
        for (std::size_t j = art0; j < ncols; ++j) tab.cost(j) = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_art[tab.basis()[i]]) continue;
            for (std::size_t j = 0; j <= ncols; ++j) tab.cost(j) -= tab.at(i, j);
        }
        const LPStatus s1 = tab.optimize(allowed, max_iters, iters);
        result.iterations = iters;
        if (s1 == LPStatus::IterationLimit) {
            result.status = s1;
            return result;
        }
        const double infeas = -tab.rhs(m);
        if (infeas > 1e-8 * (1.0 + std::abs(infeas))) {
            result.status = LPStatus::Infeasible;
            return result;
        }
        // Drive zero-level artificials out of the basis where possible.
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_art[tab.basis()[i]]) continue;
            for (std::size_t j = 0; j < art0; ++j) {
                if (std::abs(tab.at(i, j)) > 1e-9) {
                    tab.pivot(i, j);
                    break;
                }
            }
        }
        for (std::size_t j = art0; j < ncols; ++j) allowed[j] = 0;
    }

    // Phase two: reduced costs of the real objective.
    for (std::size_t j = 0; j <= ncols; ++j) tab.cost(j) = 0.0;
    for (std::size_t j = 0; j < n; ++j) tab.cost(j) = lp.cost[j];
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t b = tab.basis()[i];
        const double cb = b < n ? lp.cost[b] : 0.0;
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j <= ncols; ++j) tab.cost(j) -= cb * tab.at(i, j);
    }
    result.status = tab.optimize(allowed, max_iters, iters);
    result.iterations = iters;

    result.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t b = tab.basis()[i];
        if (b < n) result.x[b] = tab.rhs(i);
    }
    if (result.status == LPStatus::Optimal) {
        double obj = 0.0;
        for (std::size_t j = 0; j < n; ++j) obj += lp.cost[j] * result.x[j];
        result.objective = obj;
    }
    return result;
}

}  // namespace censnv
