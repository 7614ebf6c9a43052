#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "censnv/mlp.hpp"
#include "oracles.hpp"

using namespace censnv;

namespace {

Dataset smooth_data(std::mt19937_64& rng, std::size_t n, std::size_t p, double noise_sd) {
    std::uniform_real_distribution<double> u(0, 1);
    std::normal_distribution<double> noise(0, noise_sd);
    std::vector<std::vector<double>> x(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i].push_back(1.0);
        for (std::size_t j = 1; j < p; ++j) x[i].push_back(u(rng));
        s[i] = 0.3 + 0.4 * x[i][1] * x[i][1] + noise(rng);
    }
    return Dataset::from_xy(x, s);
}

// Loss of the network output as a function of one parameter.
double loss_at(MLPModel m, std::size_t layer, bool bias, std::size_t idx, double value,
               const std::vector<double>& x, double s, const LossSpec& spec) {
    (bias ? m.biases[layer][idx] : m.weights[layer][idx]) = value;
    return evaluate(spec, s, predict(m, x)).value;
}

}  // namespace

TEST(MlpForward, ZeroNetworkOutputsZero) {
    const auto m = MLPModel::zeros({3, 4, 2, 1});
    const std::vector<double> x{1.0, -2.0, 5.0};
    const auto [y, st] = forward(m, x);
    EXPECT_EQ(y, 0.0);
    for (double a : st.activations[1]) EXPECT_EQ(a, 0.5);
    for (double a : st.activations[2]) EXPECT_EQ(a, 0.5);
}

TEST(MlpForward, SingleHiddenNodeComposition) {
    auto m = MLPModel::zeros({2, 1, 1});
    m.weights[1][0] = 3.0;
    m.biases[1][0] = -0.25;
    const std::vector<double> x{1.0, 7.0};
    EXPECT_DOUBLE_EQ(predict(m, x), 0.5 * 3.0 - 0.25);
}

TEST(MlpForward, BypassedHiddenLayersGiveConstant) {
    std::mt19937_64 rng(1);
    auto m = init_mlp({3, 5, 4, 1}, rng);
    std::fill(m.weights[2].begin(), m.weights[2].end(), 0.0);
    m.biases[2][0] = 0.75;
    for (double v : {-3.0, 0.0, 10.0}) {
        const std::vector<double> x{1.0, v, -v};
        EXPECT_EQ(predict(m, x), 0.75);
    }
}

TEST(MlpForward, DimensionMismatch) {
    const auto m = MLPModel::zeros({3, 4, 2, 1});
    const std::vector<double> x{1.0};
    EXPECT_THROW(forward(m, x), InputError);
    EXPECT_THROW(MLPModel::zeros({3, 4, 2}), ConfigError);
}

TEST(MlpInit, GlorotRangeAndZeroBiases) {
    std::mt19937_64 rng(2);
    const auto m = init_mlp({26, 9, 5, 1}, rng);
    for (std::size_t l = 0; l < 3; ++l) {
        const double r = std::sqrt(6.0 / static_cast<double>(m.layer_sizes[l] + m.layer_sizes[l + 1]));
        for (double w : m.weights[l]) {
            EXPECT_LE(std::abs(w), r);
        }
        for (double b : m.biases[l]) EXPECT_EQ(b, 0.0);
    }
}

TEST(MlpBackward, InsideBandAllZero) {
    std::mt19937_64 rng(3);
    const auto m = init_mlp({2, 4, 3, 1}, rng);
    const std::vector<double> x{1.0, 0.3};
    auto [y, st] = forward(m, x);
    const auto spec = LossSpec::eps_nv(0.7, 0.2, 0.05);
    const double s = y - 0.1;  // y in [s + 0.05, s + 0.2]
    const auto g = backward(m, st, s, spec);
    for (const auto& w : g.weights)
        for (double v : w) EXPECT_EQ(v, 0.0);
    for (const auto& b : g.biases)
        for (double v : b) EXPECT_EQ(v, 0.0);
}

TEST(MlpBackward, OutputDeltaIsLossSubgradient) {
    std::mt19937_64 rng(4);
    const auto m = init_mlp({2, 4, 3, 1}, rng);
    const std::vector<double> x{1.0, 0.3};
    const auto spec = LossSpec::eps_nv(0.7, 0.2, 0.05);
    auto [y, st] = forward(m, x);
    backward(m, st, y - 1.0, spec);
    EXPECT_DOUBLE_EQ(st.deltas.back()[0], 0.3);
    backward(m, st, y + 1.0, spec);
    EXPECT_DOUBLE_EQ(st.deltas.back()[0], -0.7);
}

TEST(MlpBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    const std::vector<LossSpec> specs{LossSpec::mse(), LossSpec::nvc(0.8), LossSpec::eps_nv(0.65, 0.2, 0.05)};
    for (const auto& spec : specs) {
        int points = 0;
        while (points < 20) {
            auto m = init_mlp({2, 3, 2, 1}, rng);
            for (auto& b : m.biases)
                for (double& v : b) v = 0.3 * u(rng);
            const std::vector<double> x{1.0, u(rng)};
            auto [y, st] = forward(m, x);
            const double s = y + 0.5 * u(rng);
            // Stay away from the kinks in the output.
            if (std::abs(y - s) < 1e-2 || std::abs(y - s - spec.eps1) < 1e-2 || std::abs(y - s - spec.eps2) < 1e-2)
                continue;
            const auto g = backward(m, st, s, spec);
            for (std::size_t l = 0; l < m.n_layers(); ++l) {
                for (std::size_t q = 0; q < m.weights[l].size(); ++q) {
                    const double fd = oracle::central_diff(
                        [&](double v) { return loss_at(m, l, false, q, v, x, s, spec); }, m.weights[l][q]);
                    EXPECT_TRUE(oracle::rel_close(g.weights[l][q], fd, 1e-4, 1e-9))
                        << to_string(spec.kind) << " W" << l << "[" << q << "] " << g.weights[l][q] << " vs " << fd;
                }
                for (std::size_t q = 0; q < m.biases[l].size(); ++q) {
                    const double fd = oracle::central_diff(
                        [&](double v) { return loss_at(m, l, true, q, v, x, s, spec); }, m.biases[l][q]);
                    EXPECT_TRUE(oracle::rel_close(g.biases[l][q], fd, 1e-4, 1e-9))
                        << to_string(spec.kind) << " b" << l << "[" << q << "]";
                }
            }
            ++points;
        }
    }
}

TEST(MlpFit, ConstantTargetsConverge) {
    const std::size_t n = 200;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> x(n);
    for (auto& r : x) r = {1.0, u(rng), u(rng)};
    const auto data = Dataset::from_xy(x, std::vector<double>(n, 0.6));
    TrainConfig cfg;
    cfg.eta = 0.1;
    cfg.batch_size = 16;
    cfg.seed = 3;
    const auto [m, trace] = fit_sgd(data, LossSpec::mse(), {3, 5, 4, 1}, cfg);
    for (double y : predict(m, data)) EXPECT_NEAR(y, 0.6, 0.02);
}

TEST(MlpFit, IdenticalSeedIsBitIdentical) {
    std::mt19937_64 rng(7);
    const auto data = smooth_data(rng, 150, 3, 0.05);
    TrainConfig cfg;
    cfg.eta = 0.05;
    cfg.batch_size = 16;
    cfg.max_epochs = 40;
    cfg.patience = 40;
    cfg.seed = 11;
    const auto a = fit_sgd(data, LossSpec::eps_nv(0.75, 0.1, 0.01), {3, 6, 4, 1}, cfg);
    const auto b = fit_sgd(data, LossSpec::eps_nv(0.75, 0.1, 0.01), {3, 6, 4, 1}, cfg);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    cfg.optimizer = Optimizer::Adam;
    cfg.eta = 0.01;
    EXPECT_EQ(fit_sgd(data, LossSpec::nvc(0.75), {3, 6, 4, 1}, cfg).first,
              fit_sgd(data, LossSpec::nvc(0.75), {3, 6, 4, 1}, cfg).first);
}

TEST(MlpFit, ZeroBandStationarity) {
    // Targets far below every prediction's band floor are impossible here:
    // use a band wide enough to contain every initial output.
    std::mt19937_64 rng(8);
    const auto data = smooth_data(rng, 64, 3, 0.05);
    std::mt19937_64 init_rng(21);
    const auto init = init_mlp({3, 4, 3, 1}, init_rng);
    double lo = 1e9, hi = -1e9;
    for (double y : predict(init, data)) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    }
    std::vector<std::vector<double>> x;
    for (const auto& r : data.rows) x.push_back(r.features);
    // s + eps2 <= y <= s + eps1 for every row when s = lo - 1, eps2 = 0, eps1 = hi - lo + 2.
    const auto flat = Dataset::from_xy(x, std::vector<double>(data.size(), lo - 1.0));
    TrainConfig cfg;
    cfg.eta = 0.5;
    cfg.batch_size = 8;
    cfg.max_epochs = 1;
    cfg.patience = 1;
    cfg.val_fraction = 0.0;
    cfg.seed = 21;
    const auto [m, trace] = fit_sgd(flat, LossSpec::eps_nv(0.6, hi - lo + 2.0, 0.0), {3, 4, 3, 1}, cfg);
    EXPECT_EQ(m, init);
}

TEST(MlpFit, DivergenceNamesEpochAndBatch) {
    std::mt19937_64 rng(9);
    const auto data = smooth_data(rng, 100, 3, 0.05);
    TrainConfig cfg;
    cfg.eta = 1e200;
    cfg.batch_size = 10;
    try {
        fit_sgd(data, LossSpec::mse(), {3, 4, 3, 1}, cfg);
        FAIL();
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.epoch(), 1u);
        const std::string what = e.what();
        EXPECT_NE(what.find("epoch"), std::string::npos);
    }
}

TEST(MlpFit, RejectsWrongArchitecture) {
    std::mt19937_64 rng(9);
    const auto data = smooth_data(rng, 100, 3, 0.05);
    TrainConfig cfg;
    EXPECT_THROW(fit_sgd(data, LossSpec::mse(), {3, 4, 1}, cfg), ConfigError);
    EXPECT_THROW(fit_sgd(data, LossSpec::mse(), {4, 4, 3, 1}, cfg), ConfigError);
    EXPECT_THROW(fit_sgd(data, LossSpec::mse(), {3, 4, 3, 2}, cfg), ConfigError);
}

TEST(MlpUas, SameDatasetGivesZeroDistance) {
    std::mt19937_64 rng(10);
    const auto data = smooth_data(rng, 100, 3, 0.05);
    TrainConfig cfg;
    cfg.eta = 1e-3;
    const auto spec = LossSpec::eps_nv(0.55, 0.1976, 0.0022);
    EXPECT_EQ(uas_probe(data, spec, {3, 5, 4, 1}, cfg, 17, 3, data.rows[17]), 0.0);
    EXPECT_THROW(uas_probe(data, spec, {3, 5, 4, 1}, cfg, 100, 3, data.rows[0]), InputError);
}

TEST(MlpUas, BoundFormula) {
    EXPECT_NEAR(uas_bound(0.55, 1e-3, 100, 3), 2 * 0.55 * (0.001 * std::sqrt(300.0) + 2 * 0.003), 1e-15);
    EXPECT_NEAR(uas_bound(0.55, 1e-3, 100, 3), 0.02565, 1e-5);
    EXPECT_NEAR(uas_bound(0.55, 2e-3, 100, 3), 2 * uas_bound(0.55, 1e-3, 100, 3), 1e-15);
}

TEST(MlpUas, DistanceWithinBound) {
    const auto spec = LossSpec::eps_nv(0.55, 0.1976, 0.0022);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        std::mt19937_64 rng(100 + seed);
        const auto data = smooth_data(rng, 100, 3, 0.1);
        const auto fresh = smooth_data(rng, 10, 3, 0.1);
        std::uniform_int_distribution<std::size_t> pick(0, 99);
        for (int k = 0; k < 10; ++k) {
            TrainConfig cfg;
            cfg.eta = 1e-3;
            cfg.seed = seed;
            const double d = uas_probe(data, spec, {3, 6, 4, 1}, cfg, pick(rng), 3, fresh.rows[k]);
            EXPECT_LE(d, uas_bound(0.55, 1e-3, 100, 3));
            cfg.eta = 2e-3;
            EXPECT_LE(uas_probe(data, spec, {3, 6, 4, 1}, cfg, pick(rng), 3, fresh.rows[k]),
                      uas_bound(0.55, 2e-3, 100, 3));
        }
    }
}

TEST(MlpSerialization, RoundTrip) {
    std::mt19937_64 rng(12);
    const auto m = init_mlp({26, 9, 5, 1}, rng);
    std::stringstream ss;
    write_model(ss, m);
    EXPECT_EQ(read_mlp_model(ss), m);
    std::stringstream bad("mlp 2 1\n0.5\n");
    EXPECT_THROW(read_mlp_model(bad), ParseError);
}
