#include "pcf/predictor.hpp"

#include <cmath>
#include <stdexcept>

#include "pcf/numeric.hpp"

namespace pcf {

std::string to_string(PredictorKind k) {
    switch (k) {
        case PredictorKind::Knn: return "knn";
        case PredictorKind::Mlp: return "mlp";
        case PredictorKind::Analytic: return "analytic";
    }
    return "unknown";
}

std::string to_string(FeatureMap f) {
    switch (f) {
        case FeatureMap::XA: return "xa";
        case FeatureMap::UOnly: return "u";
        case FeatureMap::SymXU: return "sym_xu";
    }
    return "unknown";
}

FeatureMap feature_map_from_string(const std::string& s) {
    if (s == "xa") return FeatureMap::XA;
    if (s == "u") return FeatureMap::UOnly;
    if (s == "sym_xu") return FeatureMap::SymXU;
    throw std::invalid_argument("unknown feature map: " + s);
}

void TrainConfig::validate() const {
    if (knn_k == 0 || batch_size == 0 || epochs == 0) throw std::invalid_argument("TrainConfig: counts must be positive");
    for (auto w : mlp_hidden) {
        if (w == 0) throw std::invalid_argument("TrainConfig: hidden widths must be positive");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be positive");
}

std::vector<double> build_features(FeatureMap fm, std::span<const double> x, int a, const Aux& aux) {
    switch (fm) {
        case FeatureMap::XA: {
            std::vector<double> f(x.begin(), x.end());
            f.push_back(static_cast<double>(a));
            return f;
        }
        case FeatureMap::UOnly:
            if (!aux.u_hat) throw std::invalid_argument("predict: feature map 'u' needs u_hat");
            return {aux.u_hat->begin(), aux.u_hat->end()};
        case FeatureMap::SymXU: {
            if (!aux.u_hat || !aux.x_cf_hat) throw std::invalid_argument("predict: feature map 'sym_xu' needs u_hat and x_cf_hat");
            if (aux.x_cf_hat->size() != x.size()) throw std::invalid_argument("predict: x_cf_hat has wrong dimension");
            std::vector<double> f(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) f[j] = 0.5 * (x[j] + (*aux.x_cf_hat)[j]);
            f.insert(f.end(), aux.u_hat->begin(), aux.u_hat->end());
            return f;
        }
    }
    return {};
}

FeatureMatrix training_features(const Dataset& data, FeatureMap fm, const Cgm* cgm, const UEstimator* u_est) {
    if ((fm == FeatureMap::UOnly || fm == FeatureMap::SymXU) && !u_est) {
        throw std::invalid_argument("training_features: feature map needs a u estimator");
    }
    if (fm == FeatureMap::SymXU && !cgm) throw std::invalid_argument("training_features: feature map needs a CGM");
    FeatureMatrix m;
    std::vector<double> xcf(data.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
        Aux aux;
        std::vector<double> u;
        if (u_est) {
            u = estimate_u(*u_est, data, i);
            aux.u_hat = std::span<const double>(u);
        }
        if (fm == FeatureMap::SymXU) {
            cgm->apply(data.x(i), data.a(i), 1 - data.a(i), xcf);
            aux.x_cf_hat = std::span<const double>(xcf);
        }
        m.append_row(build_features(fm, data.x(i), data.a(i), aux));
    }
    return m;
}

Predictor::Predictor(Knn m, FeatureMap fm, Task task) : model_(std::move(m)), feature_map_(fm), task_(task) {}
Predictor::Predictor(Mlp m, FeatureMap fm, Task task) : model_(std::move(m)), feature_map_(fm), task_(task) {}
Predictor::Predictor(Analytic m, Task task) : model_(std::move(m)), feature_map_(FeatureMap::XA), task_(task) {}

PredictorKind Predictor::kind() const {
    if (std::holds_alternative<Knn>(model_)) return PredictorKind::Knn;
    if (std::holds_alternative<Mlp>(model_)) return PredictorKind::Mlp;
    return PredictorKind::Analytic;
}

std::size_t Predictor::feature_dim() const {
    if (const auto* k = as_knn()) return k->points.cols;
    if (const auto* m = as_mlp()) return m->net.in_dim();
    return as_analytic()->spec.x_dim() + 1;
}

namespace {

double analytic_value(const Predictor::Analytic& m, std::span<const double> f) {
    const ScmSpec& s = m.spec;
    const std::size_t d = s.x_dim();
    const int a = f[d] != 0.0 ? 1 : 0;
    const auto x = f.first(d);
    if (m.mode == AnalyticMode::ExactQuadrature) {
        const auto u = infer_u(s, x, a);
        return structural_y_mean(s, u, a, m.quad_nodes);
    }
    double link = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double fx = s.form == Form::Linear ? x[j] : x[j] * x[j] * x[j];
        link += s.w_x[j] * fx + (s.w_u_prime[j] / s.w_u[j]) * (x[j] - s.w_a[j] * a);
    }
    return s.task == Task::Regression ? link : sigmoid(link);
}

}  // namespace

double Predictor::predict_features(std::span<const double> f) const {
    if (f.size() != feature_dim()) throw std::invalid_argument("predict: feature width mismatch");
    if (const auto* k = as_knn()) {
        const auto nb = k->index.query(k->points, f, k->k);
        return knn::neighbor_mean(nb, k->labels);
    }
    if (const auto* m = as_mlp()) return m->net.predict(f);
    return analytic_value(*as_analytic(), f);
}

double Predictor::predict_features_reference(std::span<const double> f) const {
    if (f.size() != feature_dim()) throw std::invalid_argument("predict: feature width mismatch");
    if (const auto* k = as_knn()) return knn::neighbor_mean(knn::query_brute_force(k->points, f, k->k), k->labels);
    return predict_features(f);
}

double Predictor::predict(std::span<const double> x, int a, const Aux& aux) const {
    return predict_features(build_features(feature_map_, x, a, aux));
}

std::vector<double> Predictor::predict_batch(const FeatureMatrix& features) const {
    if (features.rows > 0 && features.cols != feature_dim()) throw std::invalid_argument("predict: feature width mismatch");
    if (const auto* k = as_knn()) return knn::parallel::predict_batch(k->points, k->index, k->labels, features, k->k);
    if (const auto* m = as_mlp()) return m->net.predict_batch(features);
    const auto& an = *as_analytic();
    std::vector<double> out(features.rows);
    const auto n = static_cast<std::ptrdiff_t>(features.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = analytic_value(an, features.row(static_cast<std::size_t>(i)));
    }
    return out;
}

std::vector<double> Predictor::predict_batch_serial(const FeatureMatrix& features) const {
    if (const auto* k = as_knn()) return knn::serial::predict_batch(k->points, k->labels, features, k->k);
    std::vector<double> out(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) out[i] = predict_features_reference(features.row(i));
    return out;
}

nlohmann::json Predictor::to_json() const {
    nlohmann::json j{{"kind", to_string(kind())}, {"feature_map", to_string(feature_map_)}, {"task", to_string(task_)}};
    if (const auto* k = as_knn()) {
        j["k"] = k->k;
        j["cols"] = k->points.cols;
        j["points"] = k->points.data;
        j["labels"] = k->labels;
    } else if (const auto* m = as_mlp()) {
        j["network"] = m->net.to_json();
    } else {
        const auto* a = as_analytic();
        j["spec"] = a->spec;
        j["mode"] = a->mode == AnalyticMode::ClosedForm ? "closed_form" : "exact_quadrature";
        j["quad_nodes"] = a->quad_nodes;
    }
    return j;
}

Predictor Predictor::from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    const auto fm = feature_map_from_string(j.at("feature_map").get<std::string>());
    const auto task = task_from_string(j.at("task").get<std::string>());
    if (kind == "knn") {
        Knn m;
        m.k = j.at("k").get<std::size_t>();
        m.points.cols = j.at("cols").get<std::size_t>();
        m.points.data = j.at("points").get<std::vector<double>>();
        if (m.points.cols == 0 || m.points.data.size() % m.points.cols != 0) {
            throw std::invalid_argument("Predictor::from_json: malformed knn points");
        }
        m.points.rows = m.points.data.size() / m.points.cols;
        m.labels = j.at("labels").get<std::vector<double>>();
        if (m.labels.size() != m.points.rows) throw std::invalid_argument("Predictor::from_json: label count mismatch");
        m.index = knn::SortedIndex(m.points);
        return Predictor(std::move(m), fm, task);
    }
    if (kind == "mlp") return Predictor(Mlp{mlp::Network::from_json(j.at("network"))}, fm, task);
    if (kind == "analytic") {
        Analytic a;
        a.spec = j.at("spec").get<ScmSpec>();
        a.mode = j.at("mode").get<std::string>() == "closed_form" ? AnalyticMode::ClosedForm : AnalyticMode::ExactQuadrature;
        a.quad_nodes = j.value("quad_nodes", kDefaultQuadNodes);
        return Predictor(std::move(a), task);
    }
    throw std::invalid_argument("Predictor::from_json: unknown kind " + kind);
}

Predictor fit_knn(const FeatureMatrix& features, std::span<const double> labels, FeatureMap fm, Task task,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (features.rows != labels.size()) throw std::invalid_argument("fit_knn: feature/label count mismatch");
    if (features.rows < cfg.knn_k) throw std::invalid_argument("fit_knn: fewer training points than k");
    Predictor::Knn m;
    m.k = cfg.knn_k;
    m.points = features;
    m.labels.assign(labels.begin(), labels.end());
    m.index = knn::SortedIndex(m.points);
    return Predictor(std::move(m), fm, task);
}

Predictor fit_knn(const Dataset& data, FeatureMap fm, const TrainConfig& cfg, const Cgm* cgm, const UEstimator* u_est) {
    return fit_knn(training_features(data, fm, cgm, u_est), data.y_data(), fm, data.task(), cfg);
}

Predictor fit_mlp(const FeatureMatrix& features, std::span<const double> labels, FeatureMap fm, Task task,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (features.rows != labels.size()) throw std::invalid_argument("fit_mlp: feature/label count mismatch");
    if (features.rows < cfg.batch_size) throw std::invalid_argument("fit_mlp: fewer training points than the batch size");
    mlp::Network net(features.cols, cfg.mlp_hidden, task == Task::Classification, derive_seed(cfg.seed, 0x1a17));
    mlp::AdamOptions opt;
    opt.learning_rate = cfg.learning_rate;
    opt.epochs = cfg.epochs;
    opt.batch_size = cfg.batch_size;
    opt.seed = derive_seed(cfg.seed, 0x5b0f);
    mlp::train(net, features, labels, opt);
    return Predictor(Predictor::Mlp{std::move(net)}, fm, task);
}

Predictor fit_mlp(const Dataset& data, FeatureMap fm, const TrainConfig& cfg, const Cgm* cgm, const UEstimator* u_est) {
    return fit_mlp(training_features(data, fm, cgm, u_est), data.y_data(), fm, data.task(), cfg);
}

Predictor analytic_bayes(const ScmSpec& spec, AnalyticMode mode, int quad_nodes) {
    spec.validate();
    if (mode == AnalyticMode::ExactQuadrature && spec.task == Task::Regression) {
        throw std::invalid_argument("analytic_bayes: exact quadrature applies to classification only");
    }
    return Predictor(Predictor::Analytic{spec, mode, quad_nodes}, spec.task);
}

Dataset crm_augment(const Dataset& data, const Cgm& g) {
    Dataset out(data.dim(), data.task());
    out.reserve(2 * data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.has_hidden(i)) {
            out.push_back(data.x(i), data.a(i), data.y(i), data.u(i), data.x_cf(i));
        } else {
            out.push_back(data.x(i), data.a(i), data.y(i));
        }
    }
    std::vector<double> xcf(data.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
        g.apply(data.x(i), data.a(i), 1 - data.a(i), xcf);
        out.push_back(xcf, 1 - data.a(i), data.y(i));
    }
    return out;
}

}  // namespace pcf
