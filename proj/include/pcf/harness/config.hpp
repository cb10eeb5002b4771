#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcf/fair_methods.hpp"
#include "pcf/predictor.hpp"
#include "pcf/scm.hpp"

namespace pcf::harness {

struct DatasetConfig {
    std::string name;
    ScmSpec spec;
};

struct MethodConfig {
    MethodKind kind = MethodKind::Erm;
    /// "knn", "mlp", "analytic" or "analytic_quad".
    std::string predictor = "knn";
    /// "oracle", "noisy", "bounded", "meanshift" or "rank"; "none" for ERM.
    std::string cgm = "oracle";
};

struct NoiseLevel {
    double beta = 0.0;
    double alpha = 0.0;
    double eps0 = 0.0;
};

struct VerifySettings {
    std::vector<std::string> checks;  // empty = all
    std::vector<double> eps0{0.05, 0.1, 0.2};
    double lipschitz_scale = 1.0;
    std::size_t n_test = 100000;
    std::size_t mc_n = 100000;
    std::size_t grid_size = 51;
    double support_radius = 4.0;
    std::vector<std::string> perfect_cf_predictors{"knn", "analytic"};
};

struct ExperimentConfig {
    std::vector<DatasetConfig> datasets;
    std::size_t n_train = 10000;
    std::size_t n_test = 5000;
    std::vector<MethodConfig> methods;
    std::vector<NoiseLevel> noise{NoiseLevel{}};
    std::vector<double> lambdas{1.0};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::string out_dir = "results";
    TrainConfig train;
    VerifySettings verify;

    /// Throws std::invalid_argument on empty seeds/methods/datasets or bad values.
    void validate() const;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
};

inline const std::vector<std::string>& all_verify_checks() {
    static const std::vector<std::string> names{"perfect_cf", "excess_risk", "lipschitz_bound", "fair_optimum",
                                                "te_characterization"};
    return names;
}

}  // namespace pcf::harness
