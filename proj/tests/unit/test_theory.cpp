#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "censnv/linear.hpp"
#include "censnv/theory.hpp"
#include "oracles.hpp"

using namespace censnv;

TEST(StabilityXi, WorkedExample) {
    // (5/100) * (0.55^2 / 0.45) * (1 + 0.0022)
    const double expected = 0.05 * (0.3025 / 0.45) * 1.0022;
    EXPECT_NEAR(stability_xi(100, 5, 0.55, 1.0, 0.0022), expected, 1e-15);
    EXPECT_NEAR(stability_xi(100, 5, 0.55, 1.0, 0.0022), 0.03369, 5e-6);
}

TEST(StabilityXi, ScalingAndSymmetry) {
    for (std::size_t n : {50u, 100u, 200u}) {
        EXPECT_DOUBLE_EQ(stability_xi(2 * n, 3, 0.7, 1.0, 0.01), 0.5 * stability_xi(n, 3, 0.7, 1.0, 0.01));
        EXPECT_DOUBLE_EQ(stability_xi(n, 3, 0.3, 1.0, 0.01), stability_xi(n, 3, 0.7, 1.0, 0.01));
    }
    EXPECT_THROW(stability_xi(0, 3, 0.5, 1.0, 0.0), ConfigError);
}

TEST(GeneralizationBounds, HandEvaluated) {
    // alpha 0.75: max weight 0.75, ratio 3
    const double tail = std::sqrt(std::log(20.0) / 200.0);
    const double lin = 0.75 * 1.1 * (2.0 * 2 * 3 / 100.0 + (4.0 * 2 * 3 + 1.0) * tail);
    EXPECT_NEAR(linear_generalization_bound(100, 2, 0.75, 1.0, 0.1, 0.05), lin, 1e-14);

    const double xi_r = 0.75 * 0.75 * 4.0 * 3 / (2.0 * 50 * 0.01);
    EXPECT_NEAR(regularized_stability_xi(50, 3, 0.75, 2.0, 0.01), xi_r, 1e-14);

    const double t2 = std::sqrt(std::log(40.0) / 100.0);
    const double reg = 0.5625 * 4.0 * 3 / (50 * 0.01) + 2.0 * 0.5625 * 4.0 * 3 / 0.01 * t2 + 1.1 * 0.75 * t2;
    EXPECT_NEAR(regularized_generalization_bound(50, 3, 0.75, 2.0, 0.01, 1.0, 0.1, 0.05), reg, 1e-10);

    EXPECT_THROW(linear_generalization_bound(10, 2, 0.5, 1.0, 0.0, 1.0), ConfigError);
    EXPECT_THROW(regularized_stability_xi(10, 2, 0.5, 1.0, 0.0), ConfigError);
}

TEST(GeneralizationBounds, NetworkBoundCalibration) {
    const double unit = nn_generalization_bound(1.0, 0.55, 1e-3, 100, 3, 1.0, 0.05);
    const double sgd = 1e-3 * std::sqrt(300.0) + 2.0 * 3 * 1e-3;
    const double expected = 0.3025 * sgd * std::log(100.0) * std::log(2000.0) + 0.55 * std::sqrt(std::log(20.0) / 100.0);
    EXPECT_NEAR(unit, expected, 1e-14);
    EXPECT_DOUBLE_EQ(nn_generalization_bound(2.5, 0.55, 1e-3, 100, 3, 1.0, 0.05), 2.5 * unit);
    const double c = calibrate_nn_constant(0.04, 0.55, 1e-3, 100, 3, 1.0, 0.05);
    EXPECT_NEAR(nn_generalization_bound(c, 0.55, 1e-3, 100, 3, 1.0, 0.05), 0.04, 1e-15);
}

TEST(ProbeData, TargetsInUnitInterval) {
    std::mt19937_64 rng(3);
    const auto d = make_probe_dataset(500, rng);
    ASSERT_EQ(d.size(), 500u);
    for (const auto& r : d.rows) {
        EXPECT_EQ(r.features[0], 1.0);
        EXPECT_GE(r.features[1], 0.0);
        EXPECT_LE(r.features[1], 1.0);
        EXPECT_GE(r.sale, 0.0);
        EXPECT_LE(r.sale, 1.0);
    }
    EXPECT_EQ(probe_grid().size(), 200u);
}

TEST(LooSupremum, SinglePointGridMatchesDirectLoop) {
    std::mt19937_64 rng(11);
    const auto d = make_probe_dataset(15, rng);
    const auto spec = LossSpec::eps_nv(0.55, 0.1976, 0.0022);
    const std::vector<ProbePoint> z{{0.8, 0.05}};
    const auto full = fit_lp(d, spec);
    double expected = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<std::size_t> keep;
        for (std::size_t j = 0; j < d.size(); ++j)
            if (j != i) keep.push_back(j);
        const auto m = fit_lp(d.subset(keep), spec);
        const double a = oracle::eps_nv(0.05, full.theta[0] + 0.8 * full.theta[1], 0.55, 0.1976, 0.0022);
        const double b = oracle::eps_nv(0.05, m.theta[0] + 0.8 * m.theta[1], 0.55, 0.1976, 0.0022);
        expected = std::max(expected, std::abs(a - b));
    }
    EXPECT_NEAR(loo_supremum(d, spec, z), expected, 1e-12);
}

TEST(LooSupremum, BoundedByLipschitzTimesPredictionShift) {
    std::mt19937_64 rng(5);
    const auto d = make_probe_dataset(30, rng);
    const auto spec = LossSpec::eps_nv(0.7, 0.1, 0.02);
    const auto grid = probe_grid(5, 3);
    const double sup = loo_supremum(d, spec, grid);
    const auto full = fit_lp(d, spec);
    double shift = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<std::size_t> keep;
        for (std::size_t j = 0; j < d.size(); ++j)
            if (j != i) keep.push_back(j);
        const auto m = fit_lp(d.subset(keep), spec);
        for (const auto& z : grid)
            shift = std::max(shift, std::abs((m.theta[0] - full.theta[0]) + (m.theta[1] - full.theta[1]) * z.x));
    }
    EXPECT_GE(sup, 0.0);
    EXPECT_LE(sup, lipschitz_constant(spec) * shift + 1e-12);
}

TEST(LooSupremum, Errors) {
    const auto spec = LossSpec::eps_nv(0.55, 0.1, 0.0);
    EXPECT_THROW(loo_supremum(Dataset::from_xy({{1, 0.5}}, {0.2}), spec, probe_grid()), InputError);
    EXPECT_THROW(loo_supremum(Dataset::from_xy({{1}, {1}}, {0.2, 0.3}), spec, probe_grid()), InputError);
    EXPECT_THROW(stability_probe({20}, 1, LossSpec::nvc(0.5), 1), ConfigError);
}

TEST(StabilityProbe, ReportStructure) {
    const auto spec = LossSpec::eps_nv(0.55, 0.1976, 0.0022);
    const auto s = stability_probe({20, 40}, 3, spec, 9, probe_grid(6, 4));
    ASSERT_EQ(s.instances.size(), 6u);
    ASSERT_EQ(s.mean_supremum.size(), 2u);
    bool all = true;
    for (const auto& inst : s.instances) {
        EXPECT_DOUBLE_EQ(inst.xi, stability_xi(inst.n, 2, 0.55, 1.0, 0.0022));
        EXPECT_EQ(inst.holds, inst.supremum <= inst.xi);
        all = all && inst.holds;
    }
    EXPECT_EQ(s.all_hold, all);
    EXPECT_EQ(s.decreasing, s.mean_supremum[1] < s.mean_supremum[0]);
}

// Test minus train cost of the exact minimizer never exceeds the bound at delta 0.05.
TEST(GeneralizationGap, LinearBoundHoldsOnTwentyRuns) {
    const auto spec = LossSpec::eps_nv(0.55, 0.1976, 0.0022);
    std::mt19937_64 pop(999);
    const auto population = make_probe_dataset(20000, pop);
    const double bound = linear_generalization_bound(100, 2, 0.55, 1.0, 0.0022, 0.05);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        const auto train = make_probe_dataset(100, rng);
        const auto m = fit_lp(train, spec);
        const double train_loss = mean_loss(spec, train.sales(), m.predict(train));
        const double test_loss = mean_loss(spec, population.sales(), m.predict(population));
        EXPECT_LE(test_loss - train_loss, bound) << seed;
    }
}

TEST(UasStudy, OneInstancePerSwapAndSeed) {
    const auto spec = LossSpec::eps_nv(0.55, 0.1976, 0.0022);
    const auto inst = uas_study(40, 3, {4, 5}, spec, 1e-3, 2);
    ASSERT_EQ(inst.size(), 6u);
    for (const auto& u : inst) {
        EXPECT_DOUBLE_EQ(u.bound, uas_bound(0.55, 1e-3, 40, 2));
        EXPECT_EQ(u.holds, u.distance <= u.bound);
        EXPECT_LT(u.swap_index, 40u);
        EXPECT_GE(u.distance, 0.0);
    }
    EXPECT_EQ(inst[0].seed, 4u);
    EXPECT_EQ(inst[5].seed, 5u);
    const auto again = uas_study(40, 3, {4, 5}, spec, 1e-3, 2);
    EXPECT_EQ(again[2].distance, inst[2].distance);
    EXPECT_THROW(uas_study(40, 0, {4}, spec, 1e-3, 2), ConfigError);
    EXPECT_THROW(uas_study(40, 1, {4}, spec, 1e-3, 2, {3}), ConfigError);
}
