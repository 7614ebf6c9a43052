#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/linear.hpp"
#include "censnv/loss.hpp"
#include "censnv/training.hpp"

namespace censnv {

/**
 * Fully connected network: sigmoid hidden layers, one identity output node.
 *
 * weights[l] maps layer l to layer l + 1 and is stored row-major with shape
 * layer_sizes[l + 1] x layer_sizes[l]; biases[l] has layer_sizes[l + 1] entries.
 */
struct MLPModel {
    std::vector<std::size_t> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    std::size_t n_layers() const { return weights.size(); }
    std::size_t input_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }

    std::size_t n_params() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }

    void check() const {
        if (layer_sizes.size() < 2) throw ConfigError("MLPModel: need at least input and output layers");
        if (layer_sizes.back() != 1) throw ConfigError("MLPModel: output layer must have exactly one node");
        for (std::size_t s : layer_sizes)
            if (s == 0) throw ConfigError("MLPModel: empty layer");
        if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
            throw ConfigError("MLPModel: layer count mismatch");
        }
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].size() != layer_sizes[l + 1] * layer_sizes[l] || biases[l].size() != layer_sizes[l + 1]) {
                throw ConfigError("MLPModel: parameter shape mismatch in layer " + std::to_string(l + 1));
            }
        }
    }

    // All parameters in layer order, weights before biases.
    std::vector<double> flat() const {
        std::vector<double> out;
        out.reserve(n_params());
        for (std::size_t l = 0; l < weights.size(); ++l) {
            out.insert(out.end(), weights[l].begin(), weights[l].end());
            out.insert(out.end(), biases[l].begin(), biases[l].end());
        }
        return out;
    }

    bool operator==(const MLPModel&) const = default;

    // Zero-initialized network with the given layer sizes.
    static MLPModel zeros(std::vector<std::size_t> sizes) {
        MLPModel m;
        m.layer_sizes = std::move(sizes);
        if (m.layer_sizes.size() < 2) throw ConfigError("MLPModel: need at least input and output layers");
        for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
            m.weights.emplace_back(m.layer_sizes[l + 1] * m.layer_sizes[l], 0.0);
            m.biases.emplace_back(m.layer_sizes[l + 1], 0.0);
        }
        m.check();
        return m;
    }
};

// Per-sample cache; index 0 of `activations` is the input.
struct BackpropState {
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> pre_activations;  // [l] belongs to layer l + 1
    std::vector<std::vector<double>> deltas;           // [l] belongs to layer l + 1

    explicit BackpropState(const std::vector<std::size_t>& sizes = {}) {
        if (sizes.empty()) return;
        activations.resize(sizes.size());
        for (std::size_t l = 0; l < sizes.size(); ++l) activations[l].assign(sizes[l], 0.0);
        for (std::size_t l = 1; l < sizes.size(); ++l) {
            pre_activations.emplace_back(sizes[l], 0.0);
            deltas.emplace_back(sizes[l], 0.0);
        }
    }
};

struct GradientSet {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static GradientSet zeros_like(const MLPModel& m) {
        GradientSet g;
        for (std::size_t l = 0; l < m.n_layers(); ++l) {
            g.weights.emplace_back(m.weights[l].size(), 0.0);
            g.biases.emplace_back(m.biases[l].size(), 0.0);
        }
        return g;
    }

    void clear() {
        for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
        for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
    }
};

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

namespace detail {

inline double forward_into(const MLPModel& m, const double* x, BackpropState& st) {
    std::copy(x, x + m.layer_sizes[0], st.activations[0].begin());
    const std::size_t L = m.n_layers();
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = m.layer_sizes[l];
        const std::size_t out = m.layer_sizes[l + 1];
        const double* W = m.weights[l].data();
        const double* a = st.activations[l].data();
        double* z = st.pre_activations[l].data();
        double* next = st.activations[l + 1].data();
        const bool hidden = l + 1 < L;
        for (std::size_t j = 0; j < out; ++j) {
            double acc = m.biases[l][j];
            const double* row = W + j * in;
            for (std::size_t k = 0; k < in; ++k) acc += row[k] * a[k];
            z[j] = acc;
            next[j] = hidden ? sigmoid(acc) : acc;
        }
    }
    return st.activations[L][0];
}

// Propagates `out_delta` (dL/dy) and adds scale * gradient into `acc`.
inline void backward_into(const MLPModel& m, BackpropState& st, double out_delta, GradientSet& acc, double scale) {
    const std::size_t L = m.n_layers();
    st.deltas[L - 1][0] = out_delta;
    for (std::size_t l = L; l-- > 0;) {
        const std::size_t in = m.layer_sizes[l];
        const std::size_t out = m.layer_sizes[l + 1];
        const double* a = st.activations[l].data();
        const double* d = st.deltas[l].data();
        double* gW = acc.weights[l].data();
        double* gb = acc.biases[l].data();
        for (std::size_t j = 0; j < out; ++j) {
            const double dj = scale * d[j];
            if (dj == 0.0) continue;
            gb[j] += dj;
            double* row = gW + j * in;
            for (std::size_t k = 0; k < in; ++k) row[k] += dj * a[k];
        }
        if (l == 0) break;
        // delta of layer l (hidden): sigma'(z) * W^T delta
        double* prev = st.deltas[l - 1].data();
        const double* W = m.weights[l].data();
        for (std::size_t k = 0; k < in; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < out; ++j) s += W[j * in + k] * d[j];
            prev[k] = a[k] * (1.0 - a[k]) * s;
        }
    }
}

}  // namespace detail

inline std::pair<double, BackpropState> forward(const MLPModel& model, std::span<const double> features) {
    model.check();
    if (features.size() != model.input_dim()) {
        throw InputError("forward: expected " + std::to_string(model.input_dim()) + " features, got " +
                         std::to_string(features.size()));
    }
    BackpropState st(model.layer_sizes);
    const double y = detail::forward_into(model, features.data(), st);
    return {y, std::move(st)};
}

// Gradient of the per-sample loss at target s. Fills state.deltas.
inline GradientSet backward(const MLPModel& model, BackpropState& state, double s, const LossSpec& spec) {
    model.check();
    if (state.activations.size() != model.layer_sizes.size() || state.deltas.size() != model.n_layers()) {
        throw InputError("backward: state does not belong to this model");
    }
    for (std::size_t l = 0; l < model.layer_sizes.size(); ++l) {
        if (state.activations[l].size() != model.layer_sizes[l]) {
            throw InputError("backward: state does not belong to this model");
        }
    }
    spec.validate();
    GradientSet g = GradientSet::zeros_like(model);
    const double y = state.activations.back()[0];
    detail::backward_into(model, state, evaluate(spec, s, y).subgrad, g, 1.0);
    return g;
}

inline double predict(const MLPModel& model, std::span<const double> features) {
    return forward(model, features).first;
}

inline std::vector<double> predict(const MLPModel& model, const Dataset& data) {
    model.check();
    data.check_rectangular();
    if (data.dim() != model.input_dim()) {
        throw InputError("predict: expected " + std::to_string(model.input_dim()) + " features, got " +
                         std::to_string(data.dim()));
    }
    BackpropState st(model.layer_sizes);
    std::vector<double> out;
    out.reserve(data.size());
    for (const auto& r : data.rows) out.push_back(detail::forward_into(model, r.features.data(), st));
    return out;
}

// Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)); zero biases.
inline MLPModel init_mlp(const std::vector<std::size_t>& sizes, std::mt19937_64& rng) {
    MLPModel m = MLPModel::zeros(sizes);
    for (std::size_t l = 0; l < m.n_layers(); ++l) {
        const double r = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
        std::uniform_real_distribution<double> u(-r, r);
        for (double& w : m.weights[l]) w = u(rng);
    }
    return m;
}

inline double parameter_distance(const MLPModel& a, const MLPModel& b) {
    const auto fa = a.flat();
    const auto fb = b.flat();
    if (fa.size() != fb.size()) throw InputError("parameter_distance: architectures differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) acc += (fa[i] - fb[i]) * (fa[i] - fb[i]);
    return std::sqrt(acc);
}

namespace detail {

inline void check_architecture(const std::vector<std::size_t>& arch, std::size_t p) {
    if (arch.size() != 4) throw ConfigError("network must have exactly two hidden layers: [p, h1, h2, 1]");
    if (arch.front() != p) {
        throw ConfigError("network input size " + std::to_string(arch.front()) + " does not match " +
                          std::to_string(p) + " features");
    }
    if (arch.back() != 1) throw ConfigError("network must have one output node");
    if (arch[1] == 0 || arch[2] == 0) throw ConfigError("hidden layers must be nonempty");
}

inline double mean_loss_rows(const LossSpec& spec, const MLPModel& m, const std::vector<double>& x,
                             const std::vector<double>& s, const std::vector<std::size_t>& rows, BackpropState& st) {
    const std::size_t p = m.input_dim();
    double acc = 0.0;
    for (std::size_t i : rows) acc += evaluate(spec, s[i], forward_into(m, &x[i * p], st)).value;
    return acc / static_cast<double>(rows.size());
}

struct SgdRun {
    MLPModel model;
    TrainTrace trace;
};

/**
 * Mini-batch SGD on a fixed permutation of the training part. The
 * permutation is drawn once from the seed and reused every epoch. With
 * keep_last the final iterate is returned instead of the best snapshot.
 */
inline SgdRun train_mlp(const Dataset& data, const LossSpec& spec, const std::vector<std::size_t>& arch,
                        const TrainConfig& cfg, bool keep_last, bool early_stop) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!is_trainable(spec.kind)) throw ConfigError("fit_sgd: cannot train with " + std::string(to_string(spec.kind)));
    spec.validate();
    cfg.validate();
    const std::vector<double> x = pack_features(data);
    const std::vector<double> s = data.sales();
    check_architecture(arch, data.dim());

    std::mt19937_64 rng(cfg.seed);
    MLPModel model = init_mlp(arch, rng);
    const TrainValSplit split = split_train_val(data.size(), cfg.val_fraction, cfg.shuffle, rng);
    if (cfg.batch_size > split.train.size()) {
        throw ConfigError("batch_size " + std::to_string(cfg.batch_size) + " exceeds the " +
                          std::to_string(split.train.size()) + " training rows");
    }
    std::vector<std::size_t> order = split.train;
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);

    const std::size_t p = data.dim();
    BackpropState st(arch);
    GradientSet grad = GradientSet::zeros_like(model);
    std::vector<Stepper> w_step;
    std::vector<Stepper> b_step;
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        w_step.emplace_back(cfg.optimizer, cfg.eta, model.weights[l].size());
        b_step.emplace_back(cfg.optimizer, cfg.eta, model.biases[l].size());
    }
    EarlyStopper stopper(cfg.patience, cfg.tolerance, cfg.baseline);
    MLPModel best = model;
    TrainTrace trace;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::size_t batch = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const double inv = 1.0 / static_cast<double>(end - start);
            grad.clear();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                const double y = forward_into(model, &x[i * p], st);
                const LossEval e = evaluate(spec, s[i], y);
                batch_loss += e.value;
                if (e.subgrad != 0.0) backward_into(model, st, e.subgrad, grad, inv);
            }
            if (!std::isfinite(batch_loss)) {
                throw DivergenceError("fit_sgd: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                          std::to_string(batch),
                                      epoch, batch);
            }
            for (std::size_t l = 0; l < model.n_layers(); ++l) {
                if (cfg.lambda > 0.0) {
                    for (std::size_t q = 0; q < model.weights[l].size(); ++q) {
                        grad.weights[l][q] += 2.0 * cfg.lambda * model.weights[l][q];
                    }
                }
                w_step[l].step(model.weights[l], grad.weights[l]);
                b_step[l].step(model.biases[l], grad.biases[l]);
            }
        }

        const double train_loss = mean_loss_rows(spec, model, x, s, split.train, st);
        double monitor = train_loss;
        trace.train_loss.push_back(train_loss);
        if (!split.val.empty()) {
            monitor = mean_loss_rows(spec, model, x, s, split.val, st);
            trace.val_loss.push_back(monitor);
        }
        if (!std::isfinite(monitor) || !std::isfinite(train_loss)) {
            throw DivergenceError("fit_sgd: non-finite loss at epoch " + std::to_string(epoch), epoch, 0);
        }
        if (stopper.observe(monitor) && !keep_last) best = model;
        if (early_stop && stopper.should_stop(monitor, trace.stop_reason)) break;
    }
    if (trace.stop_reason.empty()) trace.stop_reason = "max_epochs";
    trace.best_epoch = keep_last ? trace.train_loss.size() : stopper.best_epoch();
    trace.best_monitor = stopper.best();
    trace.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {keep_last ? std::move(model) : std::move(best), std::move(trace)};
}

}  // namespace detail

/**
 * Trains an MLP with architecture [p, h1, h2, 1] by mini-batch SGD (or Adam
 * when cfg.optimizer says so), with early stopping on the validation part.
 */
inline std::pair<MLPModel, TrainTrace> fit_sgd(const Dataset& data, const LossSpec& spec,
                                               const std::vector<std::size_t>& arch, const TrainConfig& cfg) {
    auto run = detail::train_mlp(data, spec, arch, cfg, false, true);
    return {std::move(run.model), std::move(run.trace)};
}

/**
 * Parameter distance between K-pass SGD runs on S and on S with row
 * `swap_index` replaced by `replacement`.
 *
 * Both runs use batch size 1, no hold-out, no early stopping, the same seed
 * (so the same initialization and permutation) and return the last iterate.
 */
inline double uas_probe(const Dataset& data, const LossSpec& spec, const std::vector<std::size_t>& arch,
                        const TrainConfig& cfg, std::size_t swap_index, std::size_t k_passes, const Row& replacement) {
    if (swap_index >= data.size()) {
        throw InputError("uas_probe: swap_index " + std::to_string(swap_index) + " out of range for " +
                         std::to_string(data.size()) + " rows");
    }
    if (k_passes == 0) throw ConfigError("uas_probe: k_passes must be >= 1");
    if (cfg.optimizer != Optimizer::Sgd) throw ConfigError("uas_probe: stability holds for plain SGD only");
    TrainConfig c = cfg;
    c.batch_size = 1;
    c.val_fraction = 0.0;
    c.max_epochs = k_passes;
    c.patience = k_passes;
    Dataset swapped = data;
    swapped.rows[swap_index] = replacement;
    const auto a = detail::train_mlp(data, spec, arch, c, true, false);
    const auto b = detail::train_mlp(swapped, spec, arch, c, true, false);
    return parameter_distance(a.model, b.model);
}

// 2 (alpha v (1 - alpha)) (eta sqrt(nK) + 2 eta K)
inline double uas_bound(double alpha, double eta, std::size_t n, std::size_t k_passes) {
    const double nk = static_cast<double>(n * k_passes);
    return 2.0 * max_weight(alpha) * (eta * std::sqrt(nk) + 2.0 * eta * static_cast<double>(k_passes));
}

// Header line "mlp s0 s1 ... sL", then per layer one line per weight row and
// one line of biases.
inline void write_model(std::ostream& os, const MLPModel& m) {
    m.check();
    os << "mlp";
    for (std::size_t s : m.layer_sizes) os << ' ' << s;
    os << '\n';
    for (std::size_t l = 0; l < m.n_layers(); ++l) {
        const std::size_t in = m.layer_sizes[l];
        for (std::size_t j = 0; j < m.layer_sizes[l + 1]; ++j) {
            for (std::size_t k = 0; k < in; ++k) os << (k ? " " : "") << format_double(m.weights[l][j * in + k]);
            os << '\n';
        }
        for (std::size_t j = 0; j < m.biases[l].size(); ++j) os << (j ? " " : "") << format_double(m.biases[l][j]);
        os << '\n';
    }
}

inline MLPModel read_mlp_model(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("mlp model: empty input", 1);
    detail::strip_cr(line);
    std::istringstream hs(line);
    std::string tag;
    hs >> tag;
    if (tag != "mlp") throw ParseError("mlp model: header must start with 'mlp'", 1);
    std::vector<std::size_t> sizes;
    std::size_t v = 0;
    while (hs >> v) sizes.push_back(v);
    MLPModel m;
    try {
        m = MLPModel::zeros(sizes);
    } catch (const ConfigError& e) {
        throw ParseError(std::string("mlp model: ") + e.what(), 1);
    }
    std::size_t lineno = 1;
    auto read_row = [&](double* out, std::size_t count) {
        ++lineno;
        if (!std::getline(is, line)) throw ParseError("mlp model: unexpected end of input", lineno);
        detail::strip_cr(line);
        std::istringstream ls(line);
        std::string tok;
        for (std::size_t k = 0; k < count; ++k) {
            if (!(ls >> tok)) throw ParseError("mlp model: expected " + std::to_string(count) + " values", lineno);
            const auto d = detail::parse_double(tok);
            if (!d || !std::isfinite(*d)) throw ParseError("mlp model: bad value '" + tok + "'", lineno);
            out[k] = *d;
        }
        if (ls >> tok) throw ParseError("mlp model: too many values", lineno);
    };
    for (std::size_t l = 0; l < m.n_layers(); ++l) {
        const std::size_t in = m.layer_sizes[l];
        for (std::size_t j = 0; j < m.layer_sizes[l + 1]; ++j) read_row(&m.weights[l][j * in], in);
        read_row(m.biases[l].data(), m.biases[l].size());
    }
    return m;
}

inline void save_model(const MLPModel& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_model(out, m);
    if (!out) throw IoError("write failed: " + path.string());
}

inline MLPModel load_mlp_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return read_mlp_model(in);
}

}  // namespace censnv
