#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include "json.hpp"

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/learner.hpp"
#include "censnv/metrics.hpp"
#include "censnv/synthetic.hpp"
#include "censnv/tuning.hpp"

#ifndef CENSNV_VERSION
#define CENSNV_VERSION "dev"
#endif

namespace censnv {

// Decimal text with 10 significant digits; the format of every report number.
inline std::string fmt10(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline double round10(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(fmt10(v).c_str(), nullptr);
}

struct ExperimentConfig {
    std::vector<double> alphas{0.55, 0.65, 0.75, 0.85, 0.95};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<LearnerKind> algorithms{LearnerKind::LrMse, LearnerKind::LrNvc, LearnerKind::LrEnvcR,
                                        LearnerKind::NnMse, LearnerKind::NnNvc, LearnerKind::NnEnvc};
    std::size_t budget = 30;
    std::size_t folds = 4;
    std::size_t nn_budget = 30;
    std::size_t nn_folds = 4;
    LearnerOptions training;
    std::filesystem::path output_dir = "experiment_out";

    void validate() const {
        if (alphas.empty()) throw ConfigError("experiment: alphas must be nonempty");
        for (double a : alphas)
            if (!(a > 0.0 && a < 1.0)) throw ConfigError("experiment: alpha " + fmt10(a) + " outside (0,1)");
        if (seeds.empty()) throw ConfigError("experiment: seeds must be nonempty");
        if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
            throw ConfigError("experiment: seeds must be distinct");
        }
        if (algorithms.empty()) throw ConfigError("experiment: algorithm list is empty");
        if (std::set<LearnerKind>(algorithms.begin(), algorithms.end()).size() != algorithms.size()) {
            throw ConfigError("experiment: algorithms must be distinct");
        }
        if (budget == 0 || nn_budget == 0) throw ConfigError("experiment: tuning budget must be >= 1");
        if (folds == 0 || nn_folds == 0) throw ConfigError("experiment: folds must be >= 1");
        training.base.validate();
    }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    std::vector<std::string> algs;
    for (auto k : c.algorithms) algs.emplace_back(to_string(k));
    j = nlohmann::json{{"alphas", c.alphas},     {"seeds", c.seeds},     {"algorithms", algs},
                       {"budget", c.budget},     {"folds", c.folds},     {"nn_budget", c.nn_budget},
                       {"nn_folds", c.nn_folds}, {"training", c.training}, {"output", c.output_dir.string()}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    ExperimentConfig d;
    c.alphas = j.value("alphas", d.alphas);
    c.seeds = j.value("seeds", d.seeds);
    if (j.contains("algorithms")) {
        c.algorithms.clear();
        for (const auto& a : j["algorithms"]) c.algorithms.push_back(parse_learner(a.get<std::string>()));
    }
    c.budget = j.value("budget", d.budget);
    c.folds = j.value("folds", d.folds);
    c.nn_budget = j.value("nn_budget", d.nn_budget);
    c.nn_folds = j.value("nn_folds", d.nn_folds);
    if (j.contains("training")) c.training = j["training"].get<LearnerOptions>();
    c.output_dir = j.value("output", d.output_dir.string());
}

// One (algorithm, alpha, seed) outcome. Metric values carry 10 significant digits.
struct RunRecord {
    LearnerKind kind = LearnerKind::LrNvc;
    double alpha = 0.5;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::optional<double> nv_cost;
    std::optional<double> rmse_q;
    std::optional<double> service_level;
    std::optional<double> service_gap;
    double fit_seconds = 0.0;
    std::size_t epochs = 0;
    Hyperparams hp;
    std::vector<double> abs_errors;
};

struct ExperimentResult {
    std::vector<RunRecord> runs;
    std::vector<TunedEntry> tuned;
    std::size_t failures = 0;
};

namespace detail {

inline ProtocolPlan protocol_for(LearnerKind k, const ExperimentConfig& cfg, std::uint64_t seed) {
    ProtocolPlan p;
    const bool nn = is_neural(k);
    p.model_plan = CVPlan{nn ? cfg.nn_folds : cfg.folds, true, seed * 7919 + 1, nn ? cfg.nn_budget : cfg.budget};
    p.eps_plan = CVPlan{nn ? cfg.nn_folds : cfg.folds, true, seed * 7919 + 2, nn ? cfg.nn_budget : cfg.budget};
    return p;
}

// Learners whose stage-1 searches are the same computation share one result.
inline std::string stage1_key(LearnerKind k, const LearnerOptions& opts) {
    const auto space = SearchSpace::model_stage(k, opts);
    nlohmann::json j = space.params;
    return std::string(is_neural(k) ? "nn/" : "lr/") + std::string(to_string(loss_for(k, kReferenceAlpha).kind)) +
           "/" + j.dump();
}

inline std::optional<double> rounded(const std::optional<double>& v) {
    if (!v) return v;
    return round10(*v);
}

}  // namespace detail

/**
 * Full sweep: per seed, generate and scale data, tune every algorithm with
 * the two-stage protocol, fit on the censored training sales and evaluate
 * on test demand in original units. Failures are recorded and the sweep
 * continues.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    const DemandModelParams params;
    ExperimentResult out;
    for (std::uint64_t seed : cfg.seeds) {
        const auto raw = generate(params, seed);
        const auto [train_raw, test_raw] = split_chronological(raw);
        const auto [train, test, scaling] = scale(train_raw, test_raw);
        std::map<double, Dataset> test_by_alpha;
        for (double a : cfg.alphas) {
            auto t = test_raw;
            attach_q_star(t, params, a);
            test_by_alpha.emplace(a, std::move(t));
        }
        LearnerOptions opts = cfg.training;
        opts.base.seed = seed;
        std::map<std::string, SearchResult> stage1_cache;

        for (auto kind : cfg.algorithms) {
            if (log) *log << "seed " << seed << " " << to_string(kind) << ": tuning" << std::endl;
            std::optional<TunedLearner> tuned;
            std::string tune_error;
            try {
                const auto key = detail::stage1_key(kind, opts);
                const auto plan = detail::protocol_for(kind, cfg, seed);
                std::optional<SearchResult> cached;
                if (auto it = stage1_cache.find(key); it != stage1_cache.end()) cached = it->second;
                tuned = two_stage_protocol(train, kind, cfg.alphas, plan, opts, cached);
                if (tuned->model_search && !cached) stage1_cache.emplace(key, *tuned->model_search);
                auto entries = to_entries(*tuned, seed);
                out.tuned.insert(out.tuned.end(), entries.begin(), entries.end());
            } catch (const Error& e) {
                tune_error = std::string("tuning: ") + e.what();
            }
            for (double a : cfg.alphas) {
                RunRecord rec;
                rec.kind = kind;
                rec.alpha = a;
                rec.seed = seed;
                if (!tuned) {
                    rec.error = tune_error;
                    ++out.failures;
                    out.runs.push_back(std::move(rec));
                    continue;
                }
                const auto& ac = *std::find_if(tuned->per_alpha.begin(), tuned->per_alpha.end(),
                                               [&](const AlphaConfig& c) { return c.alpha == a; });
                rec.hp = ac.hp;
                try {
                    const auto fit = fit_learner(kind, train, a, ac.hp, opts);
                    auto pred = predict(fit.model, test);
                    for (auto& v : pred) v = scaling.unscale_target(v);
                    const auto report = evaluate(test_by_alpha.at(a), pred, a, fit.fit_seconds);
                    rec.ok = true;
                    rec.nv_cost = detail::rounded(report.nv_cost);
                    rec.rmse_q = detail::rounded(report.rmse_q);
                    rec.service_level = detail::rounded(report.service_level);
                    rec.service_gap = detail::rounded(report.service_gap);
                    rec.fit_seconds = round10(fit.fit_seconds);
                    rec.epochs = fit.trace.train_loss.size();
                    rec.abs_errors.reserve(report.abs_errors.size());
                    for (double e : report.abs_errors) rec.abs_errors.push_back(round10(e));
                } catch (const Error& e) {
                    rec.error = std::string("fit: ") + e.what();
                    ++out.failures;
                }
                if (log) {
                    *log << "  alpha " << fmt10(a) << " " << to_string(kind) << " "
                         << (rec.ok ? "cost " + fmt10(*rec.nv_cost) : rec.error) << std::endl;
                }
                out.runs.push_back(std::move(rec));
            }
        }
    }
    return out;
}

// Seed-level aggregates per (algorithm, alpha).
struct Aggregate {
    LearnerKind kind = LearnerKind::LrNvc;
    double alpha = 0.5;
    std::size_t n_runs = 0;
    double mean_nv_cost = 0.0;
    double std_nv_cost = 0.0;
    double mean_rmse_q = 0.0;
    double std_rmse_q = 0.0;
    double mean_service_level = 0.0;
    double service_gap = 0.0;  // |mean service level - alpha|
    double mean_fit_seconds = 0.0;
    double std_fit_seconds = 0.0;
};

struct SavingsRow {
    LearnerKind eps_kind = LearnerKind::LrEnvcR;
    LearnerKind baseline = LearnerKind::LrNvc;
    double alpha = 0.5;
    std::size_t n_seeds = 0;
    double mean_savings_percent = 0.0;  // mean of per-seed savings
};

struct WilcoxonRow {
    LearnerKind eps_kind = LearnerKind::LrEnvcR;
    LearnerKind baseline = LearnerKind::LrNvc;
    double alpha = 0.5;
    std::uint64_t seed = 0;
    WilcoxonResult test;
};

struct ServiceRow {
    LearnerKind eps_kind = LearnerKind::LrEnvcR;
    LearnerKind baseline = LearnerKind::LrNvc;
    double alpha = 0.5;
    double gap_eps = 0.0;
    double gap_baseline = 0.0;
    double improvement_percent = 0.0;  // 100 (gap_baseline - gap_eps) / gap_baseline
};

struct Reports {
    std::vector<Aggregate> aggregates;
    std::vector<SavingsRow> savings;
    std::vector<WilcoxonRow> wilcoxon;
    std::vector<ServiceRow> service;

    const Aggregate* find(LearnerKind k, double alpha) const {
        for (const auto& a : aggregates)
            if (a.kind == k && a.alpha == alpha) return &a;
        return nullptr;
    }
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

}  // namespace detail

inline Reports aggregate(const std::vector<RunRecord>& runs) {
    Reports rep;
    std::vector<LearnerKind> kinds;
    std::vector<double> alphas;
    for (const auto& r : runs) {
        if (std::find(kinds.begin(), kinds.end(), r.kind) == kinds.end()) kinds.push_back(r.kind);
        if (std::find(alphas.begin(), alphas.end(), r.alpha) == alphas.end()) alphas.push_back(r.alpha);
    }
    std::sort(kinds.begin(), kinds.end());
    std::sort(alphas.begin(), alphas.end());
    auto ok_runs = [&](LearnerKind k, double a) {
        std::vector<const RunRecord*> v;
        for (const auto& r : runs)
            if (r.kind == k && r.alpha == a && r.ok && r.nv_cost) v.push_back(&r);
        return v;
    };
    for (auto k : kinds) {
        for (double a : alphas) {
            const auto rs = ok_runs(k, a);
            if (rs.empty()) continue;
            std::vector<double> cost, rmse, sl, fit;
            for (const auto* r : rs) {
                cost.push_back(*r->nv_cost);
                if (r->rmse_q) rmse.push_back(*r->rmse_q);
                sl.push_back(*r->service_level);
                fit.push_back(r->fit_seconds);
            }
            Aggregate g;
            g.kind = k;
            g.alpha = a;
            g.n_runs = rs.size();
            std::tie(g.mean_nv_cost, g.std_nv_cost) = detail::mean_std(cost);
            std::tie(g.mean_rmse_q, g.std_rmse_q) = detail::mean_std(rmse);
            g.mean_service_level = detail::mean_std(sl).first;
            g.service_gap = std::abs(g.mean_service_level - a);
            std::tie(g.mean_fit_seconds, g.std_fit_seconds) = detail::mean_std(fit);
            rep.aggregates.push_back(g);
        }
    }
    auto seed_run = [&](LearnerKind k, double a, std::uint64_t s) -> const RunRecord* {
        for (const auto& r : runs)
            if (r.kind == k && r.alpha == a && r.seed == s && r.ok) return &r;
        return nullptr;
    };
    for (auto e : kinds) {
        if (!uses_eps(e)) continue;
        for (auto base : {nvc_baseline(e), mse_baseline(e)}) {
            if (std::find(kinds.begin(), kinds.end(), base) == kinds.end()) continue;
            for (double a : alphas) {
                std::vector<double> sav;
                for (const auto* r : ok_runs(e, a)) {
                    const auto* b = seed_run(base, a, r->seed);
                    if (!b || !b->nv_cost) continue;
                    if (*b->nv_cost > 0.0) sav.push_back(savings_percent(*b->nv_cost, *r->nv_cost));
                    if (r->abs_errors.size() == b->abs_errors.size() && r->abs_errors.size() >= 10) {
                        rep.wilcoxon.push_back({e, base, a, r->seed, wilcoxon_paired(r->abs_errors, b->abs_errors)});
                    }
                }
                if (!sav.empty()) rep.savings.push_back({e, base, a, sav.size(), detail::mean_std(sav).first});
                const auto* ge = rep.find(e, a);
                const auto* gb = rep.find(base, a);
                if (ge && gb) {
                    const double imp = gb->service_gap > 0.0
                                           ? 100.0 * (gb->service_gap - ge->service_gap) / gb->service_gap
                                           : std::nan("");
                    rep.service.push_back({e, base, a, ge->service_gap, gb->service_gap, imp});
                }
            }
        }
    }
    return rep;
}

// Per-run tables: runs.csv, abs_errors.csv, fit_time.csv, tuned.json.
inline void write_runs(const ExperimentResult& res, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) throw IoError("cannot write " + (dir / name).string());
        return f;
    };
    auto opt = [](const std::optional<double>& v) { return v ? fmt10(*v) : std::string(); };
    {
        auto f = open("runs.csv");
        f << "algorithm,alpha,seed,status,nv_cost,rmse_q,service_level,service_gap,epochs,eta,lambda,batch_size,"
             "units1,units2,eps1,eps2,error\n";
        for (const auto& r : res.runs) {
            std::string err = r.error;
            std::replace(err.begin(), err.end(), ',', ';');
            std::replace(err.begin(), err.end(), '\n', ' ');
            f << to_string(r.kind) << ',' << fmt10(r.alpha) << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ','
              << opt(r.nv_cost) << ',' << opt(r.rmse_q) << ',' << opt(r.service_level) << ',' << opt(r.service_gap)
              << ',' << r.epochs << ',' << fmt10(r.hp.eta) << ',' << fmt10(r.hp.lambda) << ',' << r.hp.batch_size
              << ',' << r.hp.units1 << ',' << r.hp.units2 << ',' << fmt10(r.hp.eps1) << ',' << fmt10(r.hp.eps2)
              << ',' << err << '\n';
        }
    }
    {
        auto f = open("abs_errors.csv");
        f << "algorithm,alpha,seed,row,abs_error\n";
        for (const auto& r : res.runs)
            for (std::size_t i = 0; i < r.abs_errors.size(); ++i)
                f << to_string(r.kind) << ',' << fmt10(r.alpha) << ',' << r.seed << ',' << i << ','
                  << fmt10(r.abs_errors[i]) << '\n';
    }
    {
        auto f = open("fit_time.csv");
        f << "algorithm,alpha,seed,fit_seconds,epochs\n";
        for (const auto& r : res.runs)
            if (r.ok)
                f << to_string(r.kind) << ',' << fmt10(r.alpha) << ',' << r.seed << ',' << fmt10(r.fit_seconds) << ','
                  << r.epochs << '\n';
    }
    save_tuned(res.tuned, dir / "tuned.json");
}

namespace detail {

inline std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, std::size_t& header_cols) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file", 1);
    strip_cr(line);
    header_cols = split_commas(line).size();
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        std::vector<std::string> cells;
        for (auto c : split_commas(line)) cells.emplace_back(c);
        if (cells.size() != header_cols) {
            throw ParseError(path.string() + ": row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(header_cols),
                             lineno);
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline double num(const std::string& s, const std::filesystem::path& path) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "nan") return std::nan("");
    const auto v = parse_double(s);
    if (!v) throw ParseError(path.string() + ": not a number: '" + s + "'");
    return *v;
}

inline std::optional<double> opt_num(const std::string& s, const std::filesystem::path& path) {
    if (s.empty()) return std::nullopt;
    return num(s, path);
}

}  // namespace detail

// Reads the per-run tables written by write_runs.
inline std::vector<RunRecord> load_runs(const std::filesystem::path& dir) {
    std::size_t cols = 0;
    const auto runs_path = dir / "runs.csv";
    std::vector<RunRecord> out;
    for (const auto& c : detail::read_table(runs_path, cols)) {
        if (cols != 17) throw ParseError(runs_path.string() + ": expected 17 columns");
        RunRecord r;
        r.kind = parse_learner(c[0]);
        r.alpha = detail::num(c[1], runs_path);
        r.seed = static_cast<std::uint64_t>(std::stoull(c[2]));
        r.ok = c[3] == "ok";
        r.nv_cost = detail::opt_num(c[4], runs_path);
        r.rmse_q = detail::opt_num(c[5], runs_path);
        r.service_level = detail::opt_num(c[6], runs_path);
        r.service_gap = detail::opt_num(c[7], runs_path);
        r.epochs = static_cast<std::size_t>(std::stoull(c[8]));
        r.hp.eta = detail::num(c[9], runs_path);
        r.hp.lambda = detail::num(c[10], runs_path);
        r.hp.batch_size = static_cast<std::size_t>(std::stoull(c[11]));
        r.hp.units1 = static_cast<std::size_t>(std::stoull(c[12]));
        r.hp.units2 = static_cast<std::size_t>(std::stoull(c[13]));
        r.hp.eps1 = detail::num(c[14], runs_path);
        r.hp.eps2 = detail::num(c[15], runs_path);
        r.error = c[16];
        out.push_back(std::move(r));
    }
    auto find = [&](const std::string& alg, double a, std::uint64_t s) -> RunRecord* {
        const auto k = parse_learner(alg);
        for (auto& r : out)
            if (r.kind == k && r.alpha == a && r.seed == s) return &r;
        return nullptr;
    };
    const auto err_path = dir / "abs_errors.csv";
    if (std::filesystem::exists(err_path)) {
        for (const auto& c : detail::read_table(err_path, cols)) {
            auto* r = find(c[0], detail::num(c[1], err_path), std::stoull(c[2]));
            if (!r) throw ParseError(err_path.string() + ": row for unknown run " + c[0]);
            r->abs_errors.push_back(detail::num(c[4], err_path));
        }
    }
    const auto fit_path = dir / "fit_time.csv";
    if (std::filesystem::exists(fit_path)) {
        for (const auto& c : detail::read_table(fit_path, cols)) {
            auto* r = find(c[0], detail::num(c[1], fit_path), std::stoull(c[2]));
            if (r) r->fit_seconds = detail::num(c[3], fit_path);
        }
    }
    return out;
}

/**
 * Aggregated tables: summary.json, savings.csv, wilcoxon.csv,
 * service_level.csv, fit_time_summary.csv.
 */
inline void write_reports(const Reports& rep, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    auto open = [&](const char* name) {
        std::ofstream f(dir / name);
        if (!f) throw IoError("cannot write " + (dir / name).string());
        return f;
    };
    {
        nlohmann::ordered_json j;
        for (const auto& g : rep.aggregates) {
            j[std::string(to_string(g.kind))][fmt10(g.alpha)] = {
                {"runs", g.n_runs},
                {"nv_cost", {{"mean", fmt10(g.mean_nv_cost)}, {"std", fmt10(g.std_nv_cost)}}},
                {"rmse_q", {{"mean", fmt10(g.mean_rmse_q)}, {"std", fmt10(g.std_rmse_q)}}},
                {"service_level", {{"mean", fmt10(g.mean_service_level)}, {"gap", fmt10(g.service_gap)}}}};
        }
        auto f = open("summary.json");
        f << j.dump(2) << '\n';
    }
    {
        auto f = open("costs.csv");
        f << "algorithm,alpha,runs,mean_nv_cost,std_nv_cost,mean_rmse_q,std_rmse_q,mean_service_level,service_gap\n";
        for (const auto& g : rep.aggregates)
            f << to_string(g.kind) << ',' << fmt10(g.alpha) << ',' << g.n_runs << ',' << fmt10(g.mean_nv_cost) << ','
              << fmt10(g.std_nv_cost) << ',' << fmt10(g.mean_rmse_q) << ',' << fmt10(g.std_rmse_q) << ','
              << fmt10(g.mean_service_level) << ',' << fmt10(g.service_gap) << '\n';
    }
    {
        auto f = open("savings.csv");
        f << "algorithm,baseline,alpha,seeds,mean_savings_percent\n";
        for (const auto& s : rep.savings)
            f << to_string(s.eps_kind) << ',' << to_string(s.baseline) << ',' << fmt10(s.alpha) << ',' << s.n_seeds
              << ',' << fmt10(s.mean_savings_percent) << '\n';
    }
    {
        auto f = open("wilcoxon.csv");
        f << "algorithm,baseline,alpha,seed,statistic,p_value,median_diff,q1_diff,q3_diff,n_effective\n";
        for (const auto& w : rep.wilcoxon)
            f << to_string(w.eps_kind) << ',' << to_string(w.baseline) << ',' << fmt10(w.alpha) << ',' << w.seed << ','
              << fmt10(w.test.statistic) << ',' << fmt10(w.test.p_value) << ',' << fmt10(w.test.median_diff) << ','
              << fmt10(w.test.q1_diff) << ',' << fmt10(w.test.q3_diff) << ',' << w.test.n_effective << '\n';
    }
    {
        auto f = open("service_level.csv");
        f << "algorithm,baseline,alpha,gap,baseline_gap,improvement_percent\n";
        for (const auto& s : rep.service)
            f << to_string(s.eps_kind) << ',' << to_string(s.baseline) << ',' << fmt10(s.alpha) << ','
              << fmt10(s.gap_eps) << ',' << fmt10(s.gap_baseline) << ',' << fmt10(s.improvement_percent) << '\n';
    }
    {
        auto f = open("fit_time_summary.csv");
        f << "algorithm,alpha,runs,mean_fit_seconds,std_fit_seconds\n";
        for (const auto& g : rep.aggregates)
            f << to_string(g.kind) << ',' << fmt10(g.alpha) << ',' << g.n_runs << ',' << fmt10(g.mean_fit_seconds)
              << ',' << fmt10(g.std_fit_seconds) << '\n';
    }
}

inline void write_manifest(const ExperimentConfig& cfg, const ExperimentResult& res, const std::filesystem::path& dir) {
    nlohmann::ordered_json j;
    j["software"] = {{"name", "censnv"}, {"version", CENSNV_VERSION}};
    j["config"] = nlohmann::ordered_json::parse(nlohmann::json(cfg).dump());
    j["runs"] = res.runs.size();
    j["failures"] = res.failures;
    j["files"] = {"runs.csv",   "abs_errors.csv",    "fit_time.csv",         "tuned.json",     "summary.json",
                  "costs.csv", "savings.csv",       "wilcoxon.csv",         "service_level.csv",
                  "fit_time_summary.csv"};
    std::ofstream f(dir / "manifest.json");
    if (!f) throw IoError("cannot write " + (dir / "manifest.json").string());
    f << j.dump(2) << '\n';
}

}  // namespace censnv
