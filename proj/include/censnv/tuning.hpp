#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/learner.hpp"
#include "censnv/loss.hpp"

namespace censnv {

// One tunable coordinate: a continuous uniform range or a finite integer set.
struct ParamRange {
    std::string name;
    bool integer = false;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> choices;

    static ParamRange uniform(std::string name, double lo, double hi) {
        return {std::move(name), false, lo, hi, {}};
    }
    static ParamRange integers(std::string name, std::size_t first, std::size_t last) {
        ParamRange r{std::move(name), true, 0.0, 0.0, {}};
        for (std::size_t v = first; v <= last; ++v) r.choices.push_back(v);
        return r;
    }
    static ParamRange pinned(std::string name, double v) { return uniform(std::move(name), v, v); }

    bool operator==(const ParamRange&) const = default;
};

struct SearchSpace {
    std::vector<ParamRange> params;

    bool empty() const { return params.empty(); }
    bool has(std::string_view name) const {
        return std::any_of(params.begin(), params.end(), [&](const auto& p) { return p.name == name; });
    }

    void validate() const {
        for (const auto& p : params) {
            if (p.name != "eta" && p.name != "lambda" && p.name != "batch_size" && p.name != "units1" &&
                p.name != "units2" && p.name != "eps1" && p.name != "eps2") {
                throw ConfigError("search space: unknown parameter '" + p.name + "'");
            }
            const bool int_param = p.name == "batch_size" || p.name == "units1" || p.name == "units2";
            if (int_param != p.integer) throw ConfigError("search space: '" + p.name + "' has the wrong range type");
            if (p.integer && p.choices.empty()) throw ConfigError("search space: '" + p.name + "' has no choices");
            if (!p.integer && !(p.lo <= p.hi)) throw ConfigError("search space: '" + p.name + "' has lo > hi");
        }
    }

    // Model hyperparameters searched at the reference ratio, per learner.
    static SearchSpace model_stage(LearnerKind k, const LearnerOptions& opts = {}) {
        SearchSpace s;
        if (k == LearnerKind::LrMse && opts.mse_closed_form) return s;
        if (!is_neural(k) || opts.nn_optimizer == Optimizer::Sgd) s.params.push_back(ParamRange::uniform("eta", 0.005, 0.025));
        if (uses_lambda(k)) s.params.push_back(ParamRange::uniform("lambda", 0.0, 0.001));
        s.params.push_back(ParamRange::integers("batch_size", 64, 256));
        if (is_neural(k)) {
            s.params.push_back(ParamRange::integers("units1", 4, 10));
            s.params.push_back(ParamRange::integers("units2", 3, 8));
        }
        return s;
    }

    static SearchSpace eps_stage() {
        return {{ParamRange::uniform("eps1", 0.0, 0.20), ParamRange::uniform("eps2", 0.0, 0.15)}};
    }
};

inline void to_json(nlohmann::json& j, const ParamRange& p) {
    if (p.integer) {
        j = nlohmann::json{{"name", p.name}, {"choices", p.choices}};
    } else {
        j = nlohmann::json{{"name", p.name}, {"lo", p.lo}, {"hi", p.hi}};
    }
}

// Seed-driven fold plan: `folds` fresh 75/25 splits of the training data.
struct CVPlan {
    std::size_t folds = 4;
    bool shuffle = true;
    std::uint64_t seed = 0;
    std::size_t budget = 50;
    double train_fraction = 0.75;
};

inline void to_json(nlohmann::json& j, const CVPlan& p) {
    j = nlohmann::json{{"folds", p.folds}, {"shuffle", p.shuffle}, {"seed", p.seed}, {"budget", p.budget}};
}

inline void from_json(const nlohmann::json& j, CVPlan& p) {
    CVPlan d;
    p.folds = j.value("folds", d.folds);
    p.shuffle = j.value("shuffle", d.shuffle);
    p.seed = j.value("seed", d.seed);
    p.budget = j.value("budget", d.budget);
}

namespace detail {

inline std::uint64_t fold_seed(std::uint64_t plan_seed, std::size_t fold) {
    std::seed_seq seq{static_cast<std::uint32_t>(plan_seed), static_cast<std::uint32_t>(plan_seed >> 32),
                      static_cast<std::uint32_t>(fold), 0x5eedU};
    std::uint64_t out = 0;
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    out = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    return out;
}

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> fold_split(std::size_t n, const CVPlan& plan,
                                                                                 std::size_t fold) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (plan.shuffle) {
        std::mt19937_64 rng(fold_seed(plan.seed, fold));
        std::shuffle(idx.begin(), idx.end(), rng);
    }
    auto n_train = static_cast<std::size_t>(std::llround(plan.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    return {std::vector<std::size_t>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train)),
            std::vector<std::size_t>(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end())};
}

}  // namespace detail

/**
 * Mean held-out cost over the plan's folds. Each fold fits on its 75% part
 * and scores the learner's own training loss on the remaining 25%.
 * A divergent fit is rethrown with the fold index in the message.
 */
inline double cv_score(const Dataset& train, LearnerKind kind, double alpha, const Hyperparams& hp,
                       const CVPlan& plan, const LearnerOptions& opts = {}) {
    if (plan.folds == 0) throw ConfigError("cv_score: folds must be >= 1");
    if (!(plan.train_fraction > 0.0 && plan.train_fraction < 1.0)) {
        throw ConfigError("cv_score: train_fraction must lie in (0,1)");
    }
    if (train.size() < 2) throw InputError("cv_score: need at least 2 rows");
    const auto spec = loss_for(kind, alpha, hp.eps1, hp.eps2);
    double acc = 0.0;
    for (std::size_t j = 0; j < plan.folds; ++j) {
        const auto [fit_idx, held_idx] = detail::fold_split(train.size(), plan, j);
        const auto fit_part = train.subset(fit_idx);
        const auto held = train.subset(held_idx);
        try {
            const auto fit = fit_learner(kind, fit_part, alpha, hp, opts);
            acc += mean_loss(spec, held.sales(), predict(fit.model, held));
        } catch (const DivergenceError& e) {
            throw DivergenceError("fold " + std::to_string(j + 1) + ": " + e.what(), e.epoch(), e.batch());
        }
    }
    return acc / static_cast<double>(plan.folds);
}

struct ScoredConfig {
    Hyperparams hp;
    double score = std::numeric_limits<double>::infinity();
    std::string error;  // set when the fit diverged
};

struct SearchResult {
    Hyperparams best;
    double best_score = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    std::vector<ScoredConfig> table;
};

inline constexpr std::size_t kMaxRejections = 100000;

/**
 * The first `budget` configurations of the seeded sample stream. Sample i
 * depends only on draws made for samples < i, so a larger budget extends
 * the list without changing its prefix. Pairs with eps1 <= eps2 are redrawn.
 */
inline std::vector<Hyperparams> sample_configs(const Hyperparams& base, const SearchSpace& space,
                                               std::uint64_t seed, std::size_t budget) {
    space.validate();
    std::mt19937_64 rng(seed);
    std::vector<Hyperparams> out;
    out.reserve(budget);
    const bool constrained = space.has("eps1") || space.has("eps2");
    for (std::size_t b = 0; b < budget; ++b) {
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt == kMaxRejections) throw ConfigError("search space admits no pair with eps1 > eps2");
            Hyperparams h = base;
            for (const auto& p : space.params) {
                if (p.integer) {
                    std::uniform_int_distribution<std::size_t> pick(0, p.choices.size() - 1);
                    const std::size_t v = p.choices[pick(rng)];
                    if (p.name == "batch_size") h.batch_size = v;
                    if (p.name == "units1") h.units1 = v;
                    if (p.name == "units2") h.units2 = v;
                } else {
                    const double v = p.lo == p.hi ? p.lo : std::uniform_real_distribution<double>(p.lo, p.hi)(rng);
                    if (p.name == "eta") h.eta = v;
                    if (p.name == "lambda") h.lambda = v;
                    if (p.name == "eps1") h.eps1 = v;
                    if (p.name == "eps2") h.eps2 = v;
                }
            }
            if (!constrained || (h.eps1 > h.eps2 && h.eps2 >= 0.0)) {
                out.push_back(h);
                break;
            }
        }
    }
    return out;
}

// Random search; diverging configurations score +inf and stay in the table.
inline SearchResult search(const Dataset& train, LearnerKind kind, double alpha, const Hyperparams& base,
                           const SearchSpace& space, const CVPlan& plan, const LearnerOptions& opts = {}) {
    if (space.empty()) throw ConfigError("search: empty search space");
    if (plan.budget == 0) throw ConfigError("search: budget must be >= 1");
    SearchResult res;
    for (const auto& h : sample_configs(base, space, plan.seed, plan.budget)) {
        ScoredConfig sc{h, std::numeric_limits<double>::infinity(), {}};
        try {
            sc.score = cv_score(train, kind, alpha, h, plan, opts);
        } catch (const DivergenceError& e) {
            sc.error = e.what();
        }
        if (sc.score < res.best_score) {
            res.best = h;
            res.best_score = sc.score;
            res.best_index = res.table.size();
        }
        res.table.push_back(std::move(sc));
    }
    if (!std::isfinite(res.best_score)) throw DivergenceError("search: every configuration diverged", 0, 0);
    return res;
}

inline constexpr double kReferenceAlpha = 0.55;

struct AlphaConfig {
    double alpha = 0.5;
    Hyperparams hp;
    std::optional<SearchResult> eps_search;
};

struct TunedLearner {
    LearnerKind kind = LearnerKind::LrNvc;
    Hyperparams model_hp;  // stage-1 winner, shared by every alpha
    std::optional<SearchResult> model_search;
    std::vector<AlphaConfig> per_alpha;
};

struct ProtocolPlan {
    CVPlan model_plan;
    CVPlan eps_plan;
    SearchSpace eps_space = SearchSpace::eps_stage();
    std::optional<SearchSpace> model_space;  // default: SearchSpace::model_stage(kind)
};

/**
 * Stage 1 tunes model hyperparameters at alpha 0.55 with a zero band.
 * Stage 2 keeps them fixed and tunes (eps1, eps2) per alpha, for eps
 * learners only. `stage1` may carry a precomputed stage-1 result.
 */
inline TunedLearner two_stage_protocol(const Dataset& train, LearnerKind kind, const std::vector<double>& alphas,
                                       const ProtocolPlan& plan, const LearnerOptions& opts = {},
                                       const std::optional<SearchResult>& stage1 = std::nullopt) {
    if (alphas.empty()) throw ConfigError("two_stage_protocol: alphas must be nonempty");
    TunedLearner out;
    out.kind = kind;
    const auto model_space = plan.model_space.value_or(SearchSpace::model_stage(kind, opts));
    if (stage1) {
        out.model_search = stage1;
    } else if (!model_space.empty()) {
        out.model_search = search(train, kind, kReferenceAlpha, Hyperparams{}, model_space, plan.model_plan, opts);
    }
    if (out.model_search) out.model_hp = out.model_search->best;
    out.model_hp.eps1 = 0.0;
    out.model_hp.eps2 = 0.0;
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("two_stage_protocol: alpha must lie in (0,1)");
        AlphaConfig ac{a, out.model_hp, std::nullopt};
        if (uses_eps(kind)) {
            ac.eps_search = search(train, kind, a, out.model_hp, plan.eps_space, plan.eps_plan, opts);
            ac.hp = ac.eps_search->best;
        }
        out.per_alpha.push_back(std::move(ac));
    }
    return out;
}

// Tuned configurations keyed by (learner, alpha, seed).
struct TunedEntry {
    LearnerKind kind = LearnerKind::LrNvc;
    double alpha = 0.5;
    std::uint64_t seed = 0;
    Hyperparams hp;
    std::optional<double> model_score;
    std::optional<double> eps_score;

    bool operator==(const TunedEntry&) const = default;
};

inline nlohmann::json tuned_to_json(const std::vector<TunedEntry>& entries) {
    auto arr = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json j{{"algorithm", std::string(to_string(e.kind))},
                         {"alpha", e.alpha},
                         {"seed", e.seed},
                         {"hyperparams", e.hp}};
        j["model_score"] = e.model_score ? nlohmann::json(*e.model_score) : nlohmann::json(nullptr);
        j["eps_score"] = e.eps_score ? nlohmann::json(*e.eps_score) : nlohmann::json(nullptr);
        arr.push_back(std::move(j));
    }
    return nlohmann::json{{"tuned", arr}};
}

inline std::vector<TunedEntry> tuned_from_json(const nlohmann::json& j) {
    if (!j.contains("tuned") || !j["tuned"].is_array()) throw ParseError("tuned config: missing 'tuned' array");
    std::vector<TunedEntry> out;
    for (const auto& e : j["tuned"]) {
        TunedEntry t;
        t.kind = parse_learner(e.at("algorithm").get<std::string>());
        t.alpha = e.at("alpha").get<double>();
        t.seed = e.at("seed").get<std::uint64_t>();
        t.hp = e.at("hyperparams").get<Hyperparams>();
        if (e.contains("model_score") && !e["model_score"].is_null()) t.model_score = e["model_score"].get<double>();
        if (e.contains("eps_score") && !e["eps_score"].is_null()) t.eps_score = e["eps_score"].get<double>();
        out.push_back(t);
    }
    return out;
}

inline std::vector<TunedEntry> to_entries(const TunedLearner& t, std::uint64_t seed) {
    std::vector<TunedEntry> out;
    for (const auto& a : t.per_alpha) {
        TunedEntry e{t.kind, a.alpha, seed, a.hp, std::nullopt, std::nullopt};
        if (t.model_search) e.model_score = t.model_search->best_score;
        if (a.eps_search) e.eps_score = a.eps_search->best_score;
        out.push_back(e);
    }
    return out;
}

inline const TunedEntry* find_tuned(const std::vector<TunedEntry>& entries, LearnerKind k, double alpha,
                                    std::uint64_t seed) {
    for (const auto& e : entries)
        if (e.kind == k && e.seed == seed && std::abs(e.alpha - alpha) < 1e-12) return &e;
    return nullptr;
}

inline void save_tuned(const std::vector<TunedEntry>& entries, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << tuned_to_json(entries).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<TunedEntry> load_tuned(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return tuned_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace censnv
