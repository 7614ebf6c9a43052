// censnv command-line front end.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 some runs failed,
// 3 file missing, unreadable, malformed or of the wrong shape.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "censnv/censnv.hpp"

using namespace censnv;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kPartial = 2;
constexpr int kIo = 3;

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

nlohmann::json num_or_null(const std::optional<double>& v) {
    return v ? nlohmann::json(round10(*v)) : nlohmann::json(nullptr);
}

// Training CSV plus its map into model units (sidecar, else fitted here).
std::pair<Dataset, ScalingRecord> load_training(const fs::path& path) {
    Dataset raw;
    try {
        raw = load_csv(path);
    } catch (const Error& e) {
        if (dynamic_cast<const IoError*>(&e)) throw;
        throw ParseError(path.string() + ": " + e.what());
    }
    const auto rec = raw.scaling ? *raw.scaling : fit_scaling(raw);
    if (rec.feature_mean.size() != raw.dim()) {
        throw InputError(path.string() + ": scaling sidecar has " + std::to_string(rec.feature_mean.size()) +
                         " features, file has " + std::to_string(raw.dim()));
    }
    return {apply_scaling(raw, rec), rec};
}

LearnerOptions training_options(const std::string& config_path) {
    if (config_path.empty()) return {};
    const auto j = read_json(config_path);
    try {
        return j.contains("training") ? j["training"].get<LearnerOptions>() : j.get<LearnerOptions>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(config_path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
    std::uint64_t seed = 42;
    std::string out;
    std::optional<double> alpha;
};

int cmd_gen_data(const GenDataArgs& a) {
    const DemandModelParams params;
    const fs::path dir(a.out);
    make_dir(dir);
    const auto raw = generate(params, a.seed);
    auto [train, test] = split_chronological(raw);
    const auto rec = fit_scaling(train);
    train.scaling = rec;
    test.scaling = rec;
    if (a.alpha) {
        if (!(*a.alpha > 0.0 && *a.alpha < 1.0)) throw ConfigError("--alpha must lie in (0,1)");
        attach_q_star(test, params, *a.alpha);
    }
    save_csv(train, dir / "train.csv");
    save_csv(test, dir / "test.csv");
    std::cout << "wrote " << (dir / "train.csv").string() << " (" << train.size() << " rows) and "
              << (dir / "test.csv").string() << " (" << test.size() << " rows)\n";
    return kOk;
}

struct TuneArgs {
    std::string train;
    std::string algorithm;
    std::vector<double> alphas{0.55, 0.65, 0.75, 0.85, 0.95};
    std::size_t budget = 30;
    std::size_t folds = 4;
    std::uint64_t seed = 1;
    std::string config;
    std::string out = "tuned.json";
};

int cmd_tune(const TuneArgs& a) {
    const auto kind = parse_learner(a.algorithm);
    auto opts = training_options(a.config);
    opts.base.seed = a.seed;
    const auto [train, rec] = load_training(a.train);
    ProtocolPlan plan;
    plan.model_plan = CVPlan{a.folds, true, a.seed * 7919 + 1, a.budget};
    plan.eps_plan = CVPlan{a.folds, true, a.seed * 7919 + 2, a.budget};
    const auto tuned = two_stage_protocol(train, kind, a.alphas, plan, opts);
    const auto entries = to_entries(tuned, a.seed);
    save_tuned(entries, a.out);
    for (const auto& e : entries) {
        std::cout << to_string(e.kind) << " alpha " << fmt10(e.alpha) << ": " << nlohmann::json(e.hp).dump() << '\n';
    }
    return kOk;
}

struct TrainArgs {
    std::string train;
    std::string algorithm;
    double alpha = 0.5;
    std::string tuned;
    std::uint64_t seed = 1;
    std::string config;
    std::string out = "model.json";
    std::optional<double> eta, lambda, eps1, eps2;
    std::optional<std::size_t> batch_size, units1, units2;
};

int cmd_train(const TrainArgs& a) {
    const auto kind = parse_learner(a.algorithm);
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw ConfigError("--alpha must lie in (0,1)");
    auto opts = training_options(a.config);
    opts.base.seed = a.seed;
    Hyperparams hp;
    if (!a.tuned.empty()) {
        const auto entries = load_tuned(a.tuned);
        const auto* e = find_tuned(entries, kind, a.alpha, a.seed);
        if (!e) {
            throw ConfigError(a.tuned + ": no entry for " + std::string(to_string(kind)) + " at alpha " +
                              fmt10(a.alpha) + ", seed " + std::to_string(a.seed));
        }
        hp = e->hp;
    }
    if (a.eta) hp.eta = *a.eta;
    if (a.lambda) hp.lambda = *a.lambda;
    if (a.eps1) hp.eps1 = *a.eps1;
    if (a.eps2) hp.eps2 = *a.eps2;
    if (a.batch_size) hp.batch_size = *a.batch_size;
    if (a.units1) hp.units1 = *a.units1;
    if (a.units2) hp.units2 = *a.units2;

    const auto [train, rec] = load_training(a.train);
    auto fit = fit_learner(kind, train, a.alpha, hp, opts);
    ModelFile m{kind, a.alpha, hp, rec, std::move(fit.model)};
    save_model_file(m, a.out);
    std::cout << "trained " << to_string(kind) << " at alpha " << fmt10(a.alpha) << " in " << fmt10(fit.fit_seconds)
              << " s (" << fit.trace.train_loss.size() << " epochs, " << fit.trace.stop_reason << "); wrote " << a.out
              << '\n';
    return kOk;
}

struct EvalArgs {
    std::string model;
    std::string test;
    std::string out = "report.json";
    std::string predictions;
};

int cmd_eval(const EvalArgs& a) {
    const auto m = load_model_file(a.model);
    Dataset test;
    try {
        test = load_csv(a.test);
    } catch (const Error& e) {
        if (dynamic_cast<const IoError*>(&e)) throw;
        throw ParseError(a.test + ": " + e.what());
    }
    std::vector<double> pred;
    try {
        pred = m.predict_raw(test);
    } catch (const InputError& e) {
        throw InputError(a.test + ": " + e.what());
    }
    const auto rep = evaluate(test, pred, m.alpha);

    nlohmann::ordered_json j;
    j["algorithm"] = to_string(m.kind);
    j["alpha"] = m.alpha;
    j["rows"] = test.size();
    j["nv_cost"] = num_or_null(rep.nv_cost);
    j["rmse_q"] = num_or_null(rep.rmse_q);
    j["service_level"] = num_or_null(rep.service_level);
    j["service_gap"] = num_or_null(rep.service_gap);
    auto missing = nlohmann::ordered_json::array();
    if (!rep.nv_cost) missing.push_back("nv_cost (no demand column)");
    if (!rep.service_level) missing.push_back("service_level (no demand column)");
    if (!rep.rmse_q) missing.push_back("rmse_q (no q_star column)");
    j["unavailable"] = missing;
    {
        std::ofstream out(a.out);
        if (!out) throw IoError("cannot write " + a.out);
        out << j.dump(2) << '\n';
    }
    const std::string pred_path = a.predictions.empty() ? a.out + ".predictions.csv" : a.predictions;
    std::ofstream pout(pred_path);
    if (!pout) throw IoError("cannot write " + pred_path);
    pout << "date,category,prediction\n";
    for (std::size_t i = 0; i < test.size(); ++i)
        pout << to_iso(test.rows[i].date) << ',' << test.rows[i].category << ',' << fmt10(pred[i]) << '\n';
    std::cout << j.dump(2) << '\n';
    return kOk;
}

struct ExperimentArgs {
    std::string config;
    std::vector<double> alphas;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> algorithms;
    bool algorithms_given = false;
    std::optional<std::size_t> budget, folds, nn_budget, nn_folds;
    std::string out;
    bool quiet = false;
};

int cmd_experiment(ExperimentArgs a) {
    ExperimentConfig cfg;
    if (!a.config.empty()) {
        try {
            const auto j = read_json(a.config);
            // A manifest from an earlier run carries its configuration under "config".
            cfg = (j.contains("config") && j.contains("software") ? j["config"] : j).get<ExperimentConfig>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(a.config + ": " + e.what());
        }
    }
    if (!a.alphas.empty()) cfg.alphas = a.alphas;
    if (!a.seeds.empty()) cfg.seeds = a.seeds;
    if (a.algorithms_given) {
        cfg.algorithms.clear();
        for (const auto& s : a.algorithms)
            if (!s.empty()) cfg.algorithms.push_back(parse_learner(s));
    }
    if (a.budget) cfg.budget = *a.budget;
    if (a.folds) cfg.folds = *a.folds;
    if (a.nn_budget) cfg.nn_budget = *a.nn_budget;
    if (a.nn_folds) cfg.nn_folds = *a.nn_folds;
    if (!a.out.empty()) cfg.output_dir = a.out;
    cfg.validate();
    make_dir(cfg.output_dir);

    const auto res = run_experiment(cfg, a.quiet ? nullptr : &std::cerr);
    write_runs(res, cfg.output_dir);
    const auto rep = aggregate(res.runs);
    write_reports(rep, cfg.output_dir);
    write_manifest(cfg, res, cfg.output_dir);
    for (const auto& s : rep.savings) {
        std::cout << "savings " << to_string(s.eps_kind) << " vs " << to_string(s.baseline) << " alpha "
                  << fmt10(s.alpha) << ": " << fmt10(s.mean_savings_percent) << "%\n";
    }
    std::cout << res.runs.size() - res.failures << "/" << res.runs.size() << " runs succeeded; reports in "
              << cfg.output_dir.string() << '\n';
    return res.failures ? kPartial : kOk;
}

struct ProbeArgs {
    std::vector<std::size_t> sizes{50, 100, 200};
    std::size_t datasets = 20;
    double alpha = 0.55;
    double eps1 = 0.1976;
    double eps2 = 0.0022;
    std::uint64_t seed = 1;
    std::size_t uas_n = 100;
    std::size_t uas_swaps = 10;
    std::vector<std::uint64_t> uas_seeds{1, 2, 3};
    std::size_t passes = 3;
    double eta = 1e-3;
    bool skip_uas = false;
    std::string out = "probe_out";
};

int cmd_stability_probe(const ProbeArgs& a) {
    const auto spec = LossSpec::eps_nv(a.alpha, a.eps1, a.eps2);
    spec.validate();
    const fs::path dir(a.out);
    make_dir(dir);
    const auto summary = stability_probe(a.sizes, a.datasets, spec, a.seed);
    {
        std::ofstream f(dir / "loo.csv");
        if (!f) throw IoError("cannot write " + (dir / "loo.csv").string());
        f << "n,seed,supremum,xi,holds\n";
        for (const auto& i : summary.instances)
            f << i.n << ',' << i.seed << ',' << fmt10(i.supremum) << ',' << fmt10(i.xi) << ','
              << (i.holds ? "yes" : "no") << '\n';
    }
    nlohmann::ordered_json j;
    j["loss"] = {{"alpha", a.alpha}, {"eps1", a.eps1}, {"eps2", a.eps2}};
    auto sizes = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < summary.sizes.size(); ++k) {
        const std::size_t n = summary.sizes[k];
        std::size_t held = 0;
        for (const auto& i : summary.instances) held += i.n == n && i.holds;
        sizes.push_back({{"n", n},
                         {"xi", fmt10(stability_xi(n, 2, a.alpha, 1.0, a.eps2))},
                         {"mean_supremum", fmt10(summary.mean_supremum[k])},
                         {"within_xi", held},
                         {"instances", a.datasets}});
    }
    j["leave_one_out"] = {{"sizes", sizes}, {"all_within_xi", summary.all_hold}, {"mean_decreasing", summary.decreasing}};
    std::cout << "leave-one-out: " << (summary.all_hold ? "all" : "not all") << " suprema within xi_n; seed mean "
              << (summary.decreasing ? "decreases" : "does not decrease") << " with n\n";

    if (!a.skip_uas) {
        const auto inst = uas_study(a.uas_n, a.uas_swaps, a.uas_seeds, spec, a.eta, a.passes);
        std::ofstream f(dir / "uas.csv");
        if (!f) throw IoError("cannot write " + (dir / "uas.csv").string());
        f << "seed,swap_index,distance,bound,holds\n";
        bool all = true;
        double worst = 0.0;
        for (const auto& u : inst) {
            f << u.seed << ',' << u.swap_index << ',' << fmt10(u.distance) << ',' << fmt10(u.bound) << ','
              << (u.holds ? "yes" : "no") << '\n';
            all = all && u.holds;
            worst = std::max(worst, u.distance);
        }
        j["uas"] = {{"n", a.uas_n},
                    {"passes", a.passes},
                    {"eta", a.eta},
                    {"bound", fmt10(inst.front().bound)},
                    {"max_distance", fmt10(worst)},
                    {"all_within_bound", all}};
        std::cout << "uas: max distance " << fmt10(worst) << " vs bound " << fmt10(inst.front().bound) << '\n';
    }
    std::ofstream f(dir / "probe.json");
    if (!f) throw IoError("cannot write " + (dir / "probe.json").string());
    f << j.dump(2) << '\n';
    return kOk;
}

struct ReportArgs {
    std::string in;
    std::string out;
};

int cmd_report(const ReportArgs& a) {
    const auto runs = load_runs(a.in);
    const fs::path out = a.out.empty() ? fs::path(a.in) : fs::path(a.out);
    const auto rep = aggregate(runs);
    write_reports(rep, out);
    std::cout << "aggregated " << runs.size() << " runs into " << out.string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Newsvendor learning from censored sales"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(CENSNV_VERSION));

    GenDataArgs gen;
    auto* g = app.add_subcommand("gen-data", "generate the synthetic train/test partitions");
    g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
    g->add_option("--out", gen.out, "output directory")->required();
    g->add_option("--alpha", gen.alpha, "attach optimal quantities at this critical ratio to the test file");

    TuneArgs tune;
    auto* t = app.add_subcommand("tune", "two-stage random search for one algorithm");
    t->add_option("--train", tune.train, "training CSV")->required();
    t->add_option("--algorithm", tune.algorithm, "algorithm name, e.g. LR-eNVC-R")->required();
    t->add_option("--alphas", tune.alphas, "critical ratios")->delimiter(',')->capture_default_str();
    t->add_option("--budget", tune.budget, "configurations per search")->capture_default_str();
    t->add_option("--folds", tune.folds, "random 75/25 splits per configuration")->capture_default_str();
    t->add_option("--seed", tune.seed, "search and training seed")->capture_default_str();
    t->add_option("--config", tune.config, "JSON training options");
    t->add_option("--out", tune.out, "tuned configuration file")->capture_default_str();

    TrainArgs tr;
    auto* r = app.add_subcommand("train", "fit one algorithm at one critical ratio");
    r->add_option("--train", tr.train, "training CSV")->required();
    r->add_option("--algorithm", tr.algorithm, "algorithm name")->required();
    r->add_option("--alpha", tr.alpha, "critical ratio")->required();
    r->add_option("--tuned", tr.tuned, "tuned configuration file from 'tune'");
    r->add_option("--seed", tr.seed, "training seed")->capture_default_str();
    r->add_option("--config", tr.config, "JSON training options");
    r->add_option("--out", tr.out, "model file")->capture_default_str();
    r->add_option("--eta", tr.eta);
    r->add_option("--lambda", tr.lambda);
    r->add_option("--eps1", tr.eps1);
    r->add_option("--eps2", tr.eps2);
    r->add_option("--batch-size", tr.batch_size);
    r->add_option("--units1", tr.units1);
    r->add_option("--units2", tr.units2);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "score a trained model on a test CSV");
    e->add_option("--model", ev.model, "model file")->required();
    e->add_option("--test", ev.test, "test CSV")->required();
    e->add_option("--out", ev.out, "report file")->capture_default_str();
    e->add_option("--predictions", ev.predictions, "predictions CSV (default <out>.predictions.csv)");

    ExperimentArgs ex;
    auto* x = app.add_subcommand("experiment", "tune, fit and evaluate every (seed, alpha, algorithm)");
    x->add_option("--config", ex.config, "JSON experiment configuration");
    x->add_option("--alphas", ex.alphas, "critical ratios")->delimiter(',');
    x->add_option("--seeds", ex.seeds, "data seeds")->delimiter(',');
    auto* algs = x->add_option("--algorithms", ex.algorithms, "algorithm names")->delimiter(',')->expected(0, -1);
    x->add_option("--budget", ex.budget, "linear search budget");
    x->add_option("--folds", ex.folds, "linear search splits");
    x->add_option("--nn-budget", ex.nn_budget, "network search budget");
    x->add_option("--nn-folds", ex.nn_folds, "network search splits");
    x->add_option("--out", ex.out, "output directory");
    x->add_flag("--quiet", ex.quiet, "no progress log");

    ProbeArgs pr;
    auto* p = app.add_subcommand("stability-probe", "leave-one-out and parameter-distance probes");
    p->add_option("--sizes", pr.sizes, "training sizes")->delimiter(',')->capture_default_str();
    p->add_option("--datasets", pr.datasets, "random datasets per size")->capture_default_str();
    p->add_option("--alpha", pr.alpha)->capture_default_str();
    p->add_option("--eps1", pr.eps1)->capture_default_str();
    p->add_option("--eps2", pr.eps2)->capture_default_str();
    p->add_option("--seed", pr.seed)->capture_default_str();
    p->add_option("--uas-n", pr.uas_n)->capture_default_str();
    p->add_option("--uas-swaps", pr.uas_swaps)->capture_default_str();
    p->add_option("--uas-seeds", pr.uas_seeds)->delimiter(',')->capture_default_str();
    p->add_option("--passes", pr.passes, "SGD passes K")->capture_default_str();
    p->add_option("--eta", pr.eta)->capture_default_str();
    p->add_flag("--skip-uas", pr.skip_uas);
    p->add_option("--out", pr.out, "output directory")->capture_default_str();

    ReportArgs rp;
    auto* o = app.add_subcommand("report", "rebuild aggregate tables from per-run files");
    o->add_option("--in", rp.in, "experiment output directory")->required();
    o->add_option("--out", rp.out, "destination (default: --in)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kUsage;
    }
    ex.algorithms_given = algs->count() > 0;

    try {
        if (*g) return cmd_gen_data(gen);
        if (*t) return cmd_tune(tune);
        if (*r) return cmd_train(tr);
        if (*e) return cmd_eval(ev);
        if (*x) return cmd_experiment(ex);
        if (*p) return cmd_stability_probe(pr);
        if (*o) return cmd_report(rp);
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kUsage;
    } catch (const IoError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kIo;
    } catch (const ParseError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kIo;
    } catch (const InputError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kIo;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kPartial;
    }
    return kUsage;
}
