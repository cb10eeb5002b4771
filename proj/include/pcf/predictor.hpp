#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pcf/cgm.hpp"
#include "pcf/features.hpp"
#include "pcf/knn.hpp"
#include "pcf/mlp.hpp"
#include "pcf/scm.hpp"

namespace pcf {

enum class PredictorKind { Knn, Mlp, Analytic };
/// Which inputs a predictor consumes:
///   XA    -> (x, a)
///   UOnly -> u_hat
///   SymXU -> ((x + x_cf_hat) / 2, u_hat)
enum class FeatureMap { XA, UOnly, SymXU };
enum class AnalyticMode { ClosedForm, ExactQuadrature };

std::string to_string(PredictorKind k);
std::string to_string(FeatureMap f);
FeatureMap feature_map_from_string(const std::string& s);

struct TrainConfig {
    std::size_t knn_k = 5;
    std::vector<std::size_t> mlp_hidden{20, 20};
    double learning_rate = 1e-3;
    std::size_t batch_size = 200;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Aux {
    std::optional<std::span<const double>> u_hat;
    std::optional<std::span<const double>> x_cf_hat;
};

std::vector<double> build_features(FeatureMap fm, std::span<const double> x, int a, const Aux& aux = {});

/// Feature matrix for a training set. UOnly/SymXU draw u_hat from `u_est`
/// and x_cf_hat from `cgm`; both may be null for XA.
FeatureMatrix training_features(const Dataset& data, FeatureMap fm, const Cgm* cgm = nullptr,
                                const UEstimator* u_est = nullptr);

/// A scoring function phi. Immutable after construction; predictions are pure.
class Predictor {
public:
    struct Knn {
        std::size_t k = 5;
        FeatureMatrix points;
        std::vector<double> labels;
        knn::SortedIndex index;
    };
    struct Mlp {
        mlp::Network net;
    };
    struct Analytic {
        ScmSpec spec;
        AnalyticMode mode = AnalyticMode::ClosedForm;
        int quad_nodes = kDefaultQuadNodes;
    };

    Predictor(Knn m, FeatureMap fm, Task task);
    Predictor(Mlp m, FeatureMap fm, Task task);
    Predictor(Analytic m, Task task);

    PredictorKind kind() const;
    FeatureMap feature_map() const { return feature_map_; }
    Task task() const { return task_; }
    std::size_t feature_dim() const;

    double predict(std::span<const double> x, int a, const Aux& aux = {}) const;
    double predict_features(std::span<const double> f) const;
    /// Same value as predict_features; KNN scans every training point.
    double predict_features_reference(std::span<const double> f) const;
    /// OpenMP over rows; bit-identical to predict_batch_serial.
    std::vector<double> predict_batch(const FeatureMatrix& features) const;
    std::vector<double> predict_batch_serial(const FeatureMatrix& features) const;

    const Knn* as_knn() const { return std::get_if<Knn>(&model_); }
    const Mlp* as_mlp() const { return std::get_if<Mlp>(&model_); }
    const Analytic* as_analytic() const { return std::get_if<Analytic>(&model_); }

    nlohmann::json to_json() const;
    static Predictor from_json(const nlohmann::json& j);

private:
    std::variant<Knn, Mlp, Analytic> model_;
    FeatureMap feature_map_;
    Task task_;
};

Predictor fit_knn(const FeatureMatrix& features, std::span<const double> labels, FeatureMap fm, Task task,
                  const TrainConfig& cfg);
Predictor fit_knn(const Dataset& data, FeatureMap fm, const TrainConfig& cfg, const Cgm* cgm = nullptr,
                  const UEstimator* u_est = nullptr);

Predictor fit_mlp(const FeatureMatrix& features, std::span<const double> labels, FeatureMap fm, Task task,
                  const TrainConfig& cfg);
Predictor fit_mlp(const Dataset& data, FeatureMap fm, const TrainConfig& cfg, const Cgm* cgm = nullptr,
                  const UEstimator* u_est = nullptr);

/// Bayes predictor E[Y | X = x, A = a] in closed form. ClosedForm applies
/// the link formula directly (for classification: sigmoid of the noise-free
/// link); ExactQuadrature integrates eps_Y out and is classification-only.
Predictor analytic_bayes(const ScmSpec& spec, AnalyticMode mode = AnalyticMode::ClosedForm,
                         int quad_nodes = kDefaultQuadNodes);

/// Original records plus, per record, (g(x, a, 1-a), 1-a, y) with no hidden fields.
Dataset crm_augment(const Dataset& data, const Cgm& g);

}  // namespace pcf
