#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "censnv/linear.hpp"
#include "oracles.hpp"

using namespace censnv;

namespace {

Dataset noisy_linear(std::mt19937_64& rng, std::size_t n, std::size_t p, double noise_sd) {
    std::uniform_real_distribution<double> u(0, 1);
    std::normal_distribution<double> noise(0, noise_sd);
    std::vector<std::vector<double>> x(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i].push_back(1.0);
        double y = 0.3;
        for (std::size_t j = 1; j < p; ++j) {
            x[i].push_back(u(rng));
            y += 0.4 / static_cast<double>(j) * x[i][j];
        }
        s[i] = y + noise(rng);
    }
    return Dataset::from_xy(x, s);
}

TrainConfig quick_config(double eta, std::size_t batch, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.eta = eta;
    cfg.batch_size = batch;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(LinearPredict, Examples) {
    const LinearModel zero{{0, 0, 0}};
    const LinearModel two{{1, 2}};
    const LinearModel e1{{1, 0, 0}};
    const std::vector<double> x1{1, 5, 9};
    const std::vector<double> x2{1, 3};
    const std::vector<double> x3{1, 4, -2};
    const std::vector<double> short_x{1};
    EXPECT_EQ(zero.predict(x1), 0.0);
    EXPECT_DOUBLE_EQ(predict(two, x2), 7.0);
    EXPECT_DOUBLE_EQ(e1.predict(x3), 1.0);
    EXPECT_THROW(two.predict(short_x), InputError);
}

TEST(LinearClosedForm, ConstantTargetInterceptOnly) {
    const auto data = Dataset::from_xy({{1}, {1}, {1}, {1}}, {5, 5, 5, 5});
    EXPECT_NEAR(fit_mse_closed_form(data).theta[0], 5.0, 1e-12);
}

TEST(LinearClosedForm, RecoversExactCoefficients) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 1);
    const std::vector<double> beta{0.5, -1.25, 2.0, 0.75};
    std::vector<std::vector<double>> x;
    std::vector<double> s;
    for (int i = 0; i < 50; ++i) {
        std::vector<double> r{1.0, g(rng), g(rng), g(rng)};
        double y = 0.0;
        for (std::size_t j = 0; j < 4; ++j) y += beta[j] * r[j];
        x.push_back(r);
        s.push_back(y);
    }
    const auto m = fit_mse_closed_form(Dataset::from_xy(x, s));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(m.theta[j], beta[j], 1e-8);
}

TEST(LinearClosedForm, RejectsRankDeficientDesign) {
    const auto data = Dataset::from_xy({{1, 2}, {1, 2}, {1, 2}}, {1, 2, 3});
    EXPECT_THROW(fit_mse_closed_form(data), InputError);
}

TEST(LinearClosedForm, MatchesGradientDescent) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0, 1);
    std::vector<std::vector<double>> x;
    std::vector<double> s;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> r{1.0, g(rng), g(rng), g(rng), g(rng)};
        x.push_back(r);
        s.push_back(1.0 + 0.5 * r[1] - 0.3 * r[2] + 0.2 * r[3] + 0.1 * r[4] + 0.1 * g(rng));
    }
    const auto data = Dataset::from_xy(x, s);
    const auto exact = fit_mse_closed_form(data);
    TrainConfig cfg = quick_config(0.01, 16, 3);
    cfg.val_fraction = 0.0;
    cfg.max_epochs = 2000;
    cfg.patience = 200;
    cfg.tolerance = 1e-12;
    const auto [gd, trace] = fit_gd(data, LossSpec::mse(), cfg);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(gd.theta[j], exact.theta[j], 1e-2) << j;
}

TEST(LinearGd, NoiselessQuadraticFeatureRecovery) {
    std::vector<std::vector<double>> x;
    std::vector<double> s;
    for (int i = 0; i < 100; ++i) {
        const double v = static_cast<double>(i) / 100.0;
        x.push_back({1.0, v * v});
        s.push_back(2.0 * v * v);
    }
    TrainConfig cfg = quick_config(0.1, 10, 5);
    cfg.val_fraction = 0.0;
    cfg.max_epochs = 3000;
    cfg.patience = 3000;
    cfg.baseline = 0.0;
    cfg.tolerance = 0.0;
    const auto [m, trace] = fit_gd(Dataset::from_xy(x, s), LossSpec::mse(), cfg);
    EXPECT_NEAR(m.theta[1], 2.0, 1e-3);
}

TEST(LinearGd, NvcMedianRegionForTwoPointMix) {
    std::vector<std::vector<double>> x(100, std::vector<double>{1.0});
    std::vector<double> s(100);
    for (std::size_t i = 0; i < 100; ++i) s[i] = i % 2 == 0 ? 1.0 : 3.0;
    // Any theta in [1, 3] is optimal: the grid is flat there.
    const auto grid = oracle::grid_min_eps_nv(x, s, 0.5, 1e-12, 0.0, 0.0, 4.0, 1e-3);
    EXPECT_NEAR(grid.best, 0.5, 1e-9);
    const auto [m, trace] = fit_gd(Dataset::from_xy(x, s), LossSpec::nvc(0.5), quick_config(0.05, 10, 7));
    EXPECT_GE(m.theta[0], 1.0 - 1e-9);
    EXPECT_LE(m.theta[0], 3.0 + 1e-9);
}

TEST(LinearGd, StartsFromZeroAndIsDeterministic) {
    std::mt19937_64 rng(8);
    const auto data = noisy_linear(rng, 120, 3, 0.1);
    auto cfg = quick_config(0.02, 16, 99);
    cfg.max_epochs = 50;
    cfg.patience = 50;
    const auto a = fit_gd(data, LossSpec::eps_nv(0.7, 0.1, 0.01), cfg);
    const auto b = fit_gd(data, LossSpec::eps_nv(0.7, 0.1, 0.01), cfg);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    EXPECT_EQ(a.second.train_loss.size(), a.second.val_loss.size());
    EXPECT_GT(a.second.fit_seconds, 0.0);
}

TEST(LinearGd, ReturnsBestValidationSnapshot) {
    std::mt19937_64 rng(9);
    const auto data = noisy_linear(rng, 200, 3, 0.2);
    auto cfg = quick_config(0.02, 20, 4);
    cfg.max_epochs = 200;
    const auto [m, trace] = fit_gd(data, LossSpec::nvc(0.8), cfg);
    ASSERT_GE(trace.best_epoch, 1u);
    const double best = *std::min_element(trace.val_loss.begin(), trace.val_loss.end());
    EXPECT_DOUBLE_EQ(trace.val_loss[trace.best_epoch - 1], trace.best_monitor);
    EXPECT_LE(trace.best_monitor, best + cfg.tolerance);
}

TEST(LinearGd, EarlyStopsOnPatience) {
    const auto data = Dataset::from_xy(std::vector<std::vector<double>>(40, {1.0}), std::vector<double>(40, -0.5));
    auto cfg = quick_config(0.01, 8, 1);
    cfg.patience = 5;
    cfg.baseline = 0.0;
    // Zero-band start: theta = 0 gives loss 0 with a huge band, so nothing moves.
    const auto [m, trace] = fit_gd(data, LossSpec::eps_nv(0.5, 10.0, 0.0), cfg);
    EXPECT_EQ(trace.stop_reason, "patience");
    EXPECT_EQ(trace.train_loss.size(), 6u);
    EXPECT_EQ(m.theta[0], 0.0);
}

TEST(LinearGd, BaselineStop) {
    const auto data = Dataset::from_xy(std::vector<std::vector<double>>(40, {1.0}), std::vector<double>(40, -0.5));
    const auto [m, trace] = fit_gd(data, LossSpec::eps_nv(0.5, 10.0, 0.0), quick_config(0.01, 8, 1));
    EXPECT_EQ(trace.stop_reason, "baseline");
    EXPECT_EQ(trace.train_loss.size(), 1u);
}

TEST(LinearGd, DivergenceNamesEpoch) {
    std::mt19937_64 rng(10);
    const auto data = noisy_linear(rng, 100, 3, 0.1);
    auto cfg = quick_config(1e6, 10, 1);
    try {
        fit_gd(data, LossSpec::mse(), cfg);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.epoch(), 1u);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(LinearGd, RejectsBadConfig) {
    std::mt19937_64 rng(10);
    const auto data = noisy_linear(rng, 20, 2, 0.1);
    auto cfg = quick_config(0.01, 64, 1);
    EXPECT_THROW(fit_gd(data, LossSpec::mse(), cfg), ConfigError);
    cfg.batch_size = 4;
    cfg.patience = 600;
    EXPECT_THROW(fit_gd(data, LossSpec::mse(), cfg), ConfigError);
    cfg.patience = 30;
    EXPECT_THROW(fit_gd(data, LossSpec::eps_rp(1, 5, 0.1), cfg), ConfigError);
}

TEST(LinearGd, EpsNvTrainingLossNearLpOptimum) {
    for (std::size_t n : {50u, 100u, 200u}) {
        for (std::size_t p : {2u, 3u}) {
            for (std::uint64_t seed = 0; seed < 10; ++seed) {
                std::mt19937_64 rng(1000 + seed * 7 + n + p);
                const auto data = noisy_linear(rng, n, p, 0.15);
                const auto spec = LossSpec::eps_nv(0.7, 0.1976, 0.0022);
                const auto lp = solve_eps_nv_lp(data, spec);
                ASSERT_EQ(lp.status, LPStatus::Optimal);
                TrainConfig cfg = quick_config(0.01, 10, seed);
                cfg.val_fraction = 0.0;
                cfg.max_epochs = 500;
                const auto [m, trace] = fit_gd(data, spec, cfg);
                const double gd_loss = mean_loss(spec, data.sales(), m.predict(data));
                EXPECT_LE(gd_loss, lp.objective * 1.01 + 1e-12) << "n=" << n << " p=" << p << " seed=" << seed;
                EXPECT_GE(gd_loss, lp.objective - 1e-9);
            }
        }
    }
}

TEST(LinearLp, SinglePointBand) {
    const auto m = fit_lp(Dataset::from_xy({{1.0}}, {1.0}), LossSpec::eps_nv(0.5, 0.2, 0.0));
    EXPECT_NEAR(mean_loss(LossSpec::eps_nv(0.5, 0.2, 0.0), std::vector<double>{1.0}, m.predict(Dataset::from_xy({{1.0}}, {1.0}))), 0.0, 1e-12);
}

TEST(LinearLp, NoWorseThanGradientDescent) {
    std::mt19937_64 rng(21);
    const auto data = noisy_linear(rng, 50, 3, 0.2);
    const auto spec = LossSpec::eps_nv(0.85, 0.15, 0.02);
    const auto lp = fit_lp(data, spec);
    TrainConfig cfg = quick_config(0.02, 10, 3);
    const auto [gd, trace] = fit_gd(data, spec, cfg);
    EXPECT_LE(mean_loss(spec, data.sales(), lp.predict(data)), mean_loss(spec, data.sales(), gd.predict(data)) + 1e-12);
}

TEST(LinearLp, NvcLimitGivesSampleMedian) {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> g(5, 2);
    std::vector<double> s(21);
    for (auto& v : s) v = g(rng);
    const auto data = Dataset::from_xy(std::vector<std::vector<double>>(21, {1.0}), s);
    const auto m = fit_lp(data, LossSpec::eps_nv(0.5, 1e-9, 0.0));
    auto sorted = s;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_NEAR(m.theta[0], sorted[10], 1e-6);
}

TEST(LinearLp, CapacityCap) {
    const auto data = Dataset::from_xy(std::vector<std::vector<double>>(11, {1.0}), std::vector<double>(11, 1.0));
    EXPECT_THROW(fit_lp(data, LossSpec::eps_nv(0.5, 0.2, 0.0), 10), CapacityError);
    try {
        fit_lp(data, LossSpec::eps_nv(0.5, 0.2, 0.0), 10);
    } catch (const CapacityError& e) {
        EXPECT_NE(std::string(e.what()).find("fit_gd"), std::string::npos);
    }
}

TEST(LinearRegularized, NormShrinksWithLambda) {
    // Centered features, as after standardization: the unpenalized intercept
    // then does not absorb what the penalty removes from the slopes.
    std::mt19937_64 rng(23);
    auto data = noisy_linear(rng, 200, 4, 0.1);
    for (auto& r : data.rows)
        for (std::size_t j = 1; j < r.features.size(); ++j) r.features[j] -= 0.5;
    const auto spec = LossSpec::eps_nv(0.75, 0.1976, 0.0022);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.01, 0.05, 0.2, 1.0}) {
        TrainConfig cfg = quick_config(0.02, 10, 5);
        cfg.lambda = lambda;
        const auto [m, trace] = fit_gd(data, spec, cfg);
        double norm = 0.0;
        for (double v : m.theta) norm += v * v;
        norm = std::sqrt(norm);
        EXPECT_LE(norm, prev + 1e-6) << "lambda=" << lambda;
        prev = norm;
    }
}

TEST(LinearSerialization, RoundTripIsBitExact) {
    LinearModel m{{0.1, -1.0 / 3.0, 6.02214076e23, -0.0, 1e-300}};
    std::stringstream ss;
    write_model(ss, m);
    EXPECT_EQ(read_linear_model(ss), m);
    const auto path = std::filesystem::temp_directory_path() / "censnv_linear_model.txt";
    save_model(m, path);
    EXPECT_EQ(load_linear_model(path), m);
    std::filesystem::remove(path);
}

TEST(LinearSerialization, RejectsTruncatedInput) {
    std::stringstream ss("3\n1.0\n2.0\n");
    EXPECT_THROW(read_linear_model(ss), ParseError);
}
