#include "pcf/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace pcf::harness {

namespace {

DatasetConfig parse_dataset(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        return {name, ScmSpec::preset(name)};
    }
    DatasetConfig d;
    if (j.contains("spec")) {
        d.spec = j.at("spec").get<ScmSpec>();
        d.name = j.value("name", std::string("custom"));
    } else {
        d.spec = j.get<ScmSpec>();
        d.name = j.value("name", j.value("preset", std::string("custom")));
    }
    return d;
}

const std::vector<std::string> kPredictors{"knn", "mlp", "analytic", "analytic_quad"};
const std::vector<std::string> kCgms{"none", "oracle", "noisy", "bounded", "meanshift", "rank"};

template <typename T>
bool contains(const std::vector<T>& v, const T& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (datasets.empty()) throw std::invalid_argument("config: at least one dataset is required");
    if (methods.empty()) throw std::invalid_argument("config: at least one method is required");
    if (seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
    if (n_train < 1 || n_test < 1) throw std::invalid_argument("config: n_train and n_test must be at least 1");
    if (noise.empty()) throw std::invalid_argument("config: noise grid must not be empty");
    if (lambdas.empty()) throw std::invalid_argument("config: lambda grid must not be empty");
    for (const auto& d : datasets) d.spec.validate();
    for (const auto& m : methods) {
        if (!contains(kPredictors, m.predictor)) throw std::invalid_argument("config: unknown predictor " + m.predictor);
        if (!contains(kCgms, m.cgm)) throw std::invalid_argument("config: unknown cgm " + m.cgm);
        if (m.kind == MethodKind::PcfAna && m.predictor.rfind("analytic", 0) != 0) {
            throw std::invalid_argument("config: pcf_ana requires an analytic predictor");
        }
    }
    for (const auto& n : noise) {
        if (n.alpha < 0.0 || n.eps0 < 0.0) throw std::invalid_argument("config: alpha and eps0 must be non-negative");
    }
    for (double l : lambdas) {
        if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("config: lambda must lie in [0, 1]");
    }
    for (const auto& c : verify.checks) {
        if (!contains(all_verify_checks(), c)) throw std::invalid_argument("config: unknown verify check " + c);
    }
    train.validate();
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("datasets")) {
        for (const auto& d : j.at("datasets")) c.datasets.push_back(parse_dataset(d));
    } else if (j.contains("dataset")) {
        c.datasets.push_back(parse_dataset(j.at("dataset")));
    }
    c.n_train = j.value("n_train", c.n_train);
    c.n_test = j.value("n_test", c.n_test);
    if (j.contains("methods")) {
        for (const auto& m : j.at("methods")) {
            MethodConfig mc;
            if (m.is_string()) {
                mc.kind = method_kind_from_string(m.get<std::string>());
            } else {
                mc.kind = method_kind_from_string(m.at("kind").get<std::string>());
                mc.predictor = m.value("predictor", mc.predictor);
                mc.cgm = m.value("cgm", mc.cgm);
            }
            if (mc.kind == MethodKind::PcfAna && !(m.is_object() && m.contains("predictor"))) mc.predictor = "analytic";
            if (mc.kind == MethodKind::Erm) mc.cgm = "none";
            c.methods.push_back(mc);
        }
    }
    if (j.contains("noise") || j.contains("eps0")) {
        std::vector<std::pair<double, double>> ba;
        if (j.contains("noise")) {
            for (const auto& n : j.at("noise")) ba.emplace_back(n.value("beta", 0.0), n.value("alpha", 0.0));
        } else {
            ba.emplace_back(0.0, 0.0);
        }
        const auto eps = j.value("eps0", std::vector<double>{0.0});
        c.noise.clear();
        for (const auto& [b, a] : ba) {
            for (double e : eps) c.noise.push_back({b, a, e});
        }
    }
    c.lambdas = j.value("lambdas", c.lambdas);
    c.seeds = j.value("seeds", c.seeds);
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.contains("train")) {
        const auto& t = j.at("train");
        c.train.knn_k = t.value("knn_k", c.train.knn_k);
        c.train.mlp_hidden = t.value("mlp_hidden", c.train.mlp_hidden);
        c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.epochs = t.value("epochs", c.train.epochs);
    }
    if (j.contains("verify")) {
        const auto& v = j.at("verify");
        c.verify.checks = v.value("checks", c.verify.checks);
        c.verify.eps0 = v.value("eps0", c.verify.eps0);
        c.verify.lipschitz_scale = v.value("lipschitz_scale", c.verify.lipschitz_scale);
        c.verify.n_test = v.value("n_test", c.verify.n_test);
        c.verify.mc_n = v.value("mc_n", c.verify.mc_n);
        c.verify.grid_size = v.value("grid_size", c.verify.grid_size);
        c.verify.support_radius = v.value("support_radius", c.verify.support_radius);
        c.verify.perfect_cf_predictors = v.value("perfect_cf_predictors", c.verify.perfect_cf_predictors);
    }
    if (c.methods.empty() && j.contains("verify")) {
        // verify-only configs need no method list
        c.methods.push_back(MethodConfig{MethodKind::Erm, "analytic", "none"});
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    return from_json(nlohmann::json::parse(is));
}

}  // namespace pcf::harness
