#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "censnv/dataset.hpp"
#include "censnv/error.hpp"
#include "censnv/learner.hpp"
#include "censnv/synthetic.hpp"

namespace censnv {

inline void to_json(nlohmann::json& j, const ScalingRecord& r) {
    j = nlohmann::json{{"target_min", r.target_min},
                       {"target_max", r.target_max},
                       {"feature_mean", r.feature_mean},
                       {"feature_std", r.feature_std},
                       {"unscaled", r.unscaled}};
}

inline void from_json(const nlohmann::json& j, ScalingRecord& r) {
    r.target_min = j.at("target_min").get<double>();
    r.target_max = j.at("target_max").get<double>();
    r.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    r.feature_std = j.at("feature_std").get<std::vector<double>>();
    r.unscaled = j.value("unscaled", std::vector<std::size_t>{});
    if (r.feature_mean.size() != r.feature_std.size()) throw ParseError("scaling: mean/std lengths differ");
    if (!(r.target_max > r.target_min)) throw ParseError("scaling: target range must be positive");
}

/**
 * A trained model plus what is needed to apply it to raw rows: the learner,
 * its critical ratio and hyperparameters, and the training-set scaling.
 */
struct ModelFile {
    LearnerKind kind = LearnerKind::LrNvc;
    double alpha = 0.5;
    Hyperparams hp;
    ScalingRecord scaling;
    FittedModel model;

    std::size_t features() const { return scaling.feature_mean.size(); }

    // Predictions in original units for a raw (unscaled) dataset.
    std::vector<double> predict_raw(const Dataset& raw) const {
        if (raw.empty()) throw InputError("predict: dataset is empty");
        if (raw.dim() != features()) {
            throw InputError("feature count mismatch: got " + std::to_string(raw.dim()) + " feature columns, expected " +
                             std::to_string(features()));
        }
        auto pred = predict(model, apply_scaling(raw, scaling));
        for (auto& v : pred) v = scaling.unscale_target(v);
        return pred;
    }
};

inline nlohmann::json model_to_json(const ModelFile& m) {
    std::ostringstream body;
    std::visit([&](const auto& x) { write_model(body, x); }, m.model);
    return nlohmann::json{{"algorithm", std::string(to_string(m.kind))},
                          {"alpha", m.alpha},
                          {"hyperparams", m.hp},
                          {"scaling", m.scaling},
                          {"model", body.str()}};
}

inline ModelFile model_from_json(const nlohmann::json& j) {
    ModelFile m;
    try {
        m.kind = parse_learner(j.at("algorithm").get<std::string>());
        m.alpha = j.at("alpha").get<double>();
        m.hp = j.at("hyperparams").get<Hyperparams>();
        m.scaling = j.at("scaling").get<ScalingRecord>();
        std::istringstream body(j.at("model").get<std::string>());
        if (is_neural(m.kind)) {
            m.model = read_mlp_model(body);
        } else {
            m.model = read_linear_model(body);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
    return m;
}

inline void save_model_file(const ModelFile& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << model_to_json(m).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline ModelFile load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace censnv
