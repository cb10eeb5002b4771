#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcf/fair_methods.hpp"
#include "pcf/scm.hpp"

namespace pcf {

enum class Loss { Mse, CrossEntropy, ZeroOne };

std::string to_string(Loss l);

inline constexpr double kProbClamp = 1e-12;

double pointwise_loss(double prediction, double target, Loss loss);

struct TotalEffect {
    double te = 0.0;
    double te0 = 0.0;
    double te1 = 0.0;
    double max_gap = 0.0;  // max_i |yhat(x_i, a_i) - yhat(x_cf_i, 1 - a_i)|
    std::size_t n0 = 0;
    std::size_t n1 = 0;
};

struct EvalReport {
    double error = 0.0;
    /// Zero-one error for classification; equals `error` for regression.
    double error_zero_one = 0.0;
    double te = 0.0;
    double te0 = 0.0;
    double te1 = 0.0;
    double max_gap = 0.0;
    std::size_t n_test = 0;
    Task task = Task::Regression;
    Loss loss = Loss::Mse;
};

void to_json(nlohmann::json& j, const EvalReport& r);

// Reductions over precomputed predictions. Both variants produce
// bit-identical results: per-element work may run in parallel, the sums are
// pairwise over a buffer in record order.
namespace serial {
double mean_loss(std::span<const double> predictions, std::span<const double> targets, Loss loss);
TotalEffect total_effect(std::span<const double> factual, std::span<const double> counterfactual,
                         std::span<const int> a);
}  // namespace serial

namespace parallel {
double mean_loss(std::span<const double> predictions, std::span<const double> targets, Loss loss);
TotalEffect total_effect(std::span<const double> factual, std::span<const double> counterfactual,
                         std::span<const int> a);
}  // namespace parallel

using BatchPredictFn = std::function<std::vector<double>(const QueryBatch&)>;

double error(const BatchPredictFn& predict, const Dataset& test, Loss loss);

/// TE against the ground-truth counterfactuals stored in `test`.
TotalEffect total_effect(const BatchPredictFn& predict, const Dataset& test);

Loss default_loss(Task task);

/// Error (default loss per task) and TE of one method on a test set.
EvalReport evaluate(const FairMethod& method, const Dataset& test);
EvalReport evaluate(const FairMethod& method, const Dataset& test, Loss loss);
/// Same figures from predictions already computed for the factual and counterfactual query sets.
EvalReport evaluate_predictions(std::span<const double> factual, std::span<const double> counterfactual,
                                const Dataset& test, Loss loss);

}  // namespace pcf
