#include "pcf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcf/numeric.hpp"

namespace pcf {

std::string to_string(Loss l) {
    switch (l) {
        case Loss::Mse: return "mse";
        case Loss::CrossEntropy: return "cross_entropy";
        case Loss::ZeroOne: return "zero_one";
    }
    return "unknown";
}

double pointwise_loss(double prediction, double target, Loss loss) {
    switch (loss) {
        case Loss::Mse: return (prediction - target) * (prediction - target);
        case Loss::CrossEntropy: {
            const double p = std::clamp(prediction, kProbClamp, 1.0 - kProbClamp);
            return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
        }
        case Loss::ZeroOne: return ((prediction >= 0.5 ? 1.0 : 0.0) != target) ? 1.0 : 0.0;
    }
    return 0.0;
}

void to_json(nlohmann::json& j, const EvalReport& r) {
    j = nlohmann::json{{"error", r.error}, {"error_zero_one", r.error_zero_one}, {"te", r.te}, {"te0", r.te0},
                       {"te1", r.te1},     {"max_gap", r.max_gap},              {"n_test", r.n_test},
                       {"task", to_string(r.task)}, {"loss", to_string(r.loss)}};
}

namespace {

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("metrics: length mismatch");
    if (a == 0) throw std::invalid_argument("metrics: empty test set");
}

TotalEffect reduce_effect(const std::vector<double>& gaps, std::span<const int> a) {
    std::vector<double> g0, g1;
    g0.reserve(gaps.size());
    g1.reserve(gaps.size());
    TotalEffect te;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        (a[i] == 0 ? g0 : g1).push_back(gaps[i]);
        te.max_gap = std::max(te.max_gap, gaps[i]);
    }
    te.te = pairwise_mean(gaps);
    te.te0 = pairwise_mean(g0);
    te.te1 = pairwise_mean(g1);
    te.n0 = g0.size();
    te.n1 = g1.size();
    return te;
}

}  // namespace

namespace serial {

double mean_loss(std::span<const double> predictions, std::span<const double> targets, Loss loss) {
    check_sizes(predictions.size(), targets.size());
    std::vector<double> l(predictions.size());
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = pointwise_loss(predictions[i], targets[i], loss);
    return pairwise_mean(l);
}

TotalEffect total_effect(std::span<const double> factual, std::span<const double> counterfactual,
                         std::span<const int> a) {
    check_sizes(factual.size(), counterfactual.size());
    check_sizes(factual.size(), a.size());
    std::vector<double> gaps(factual.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = std::abs(factual[i] - counterfactual[i]);
    return reduce_effect(gaps, a);
}

}  // namespace serial

namespace parallel {

double mean_loss(std::span<const double> predictions, std::span<const double> targets, Loss loss) {
    check_sizes(predictions.size(), targets.size());
    std::vector<double> l(predictions.size());
    const auto n = static_cast<std::ptrdiff_t>(l.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        l[k] = pointwise_loss(predictions[k], targets[k], loss);
    }
    return pairwise_mean(l);
}

TotalEffect total_effect(std::span<const double> factual, std::span<const double> counterfactual,
                         std::span<const int> a) {
    check_sizes(factual.size(), counterfactual.size());
    check_sizes(factual.size(), a.size());
    std::vector<double> gaps(factual.size());
    const auto n = static_cast<std::ptrdiff_t>(gaps.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        gaps[k] = std::abs(factual[k] - counterfactual[k]);
    }
    return reduce_effect(gaps, a);
}

}  // namespace parallel

double error(const BatchPredictFn& predict, const Dataset& test, Loss loss) {
    if (test.empty()) throw std::invalid_argument("error: empty test set");
    const auto yhat = predict(factual_queries(test));
    return parallel::mean_loss(yhat, test.y_data(), loss);
}

TotalEffect total_effect(const BatchPredictFn& predict, const Dataset& test) {
    if (test.empty()) throw std::invalid_argument("total_effect: empty test set");
    if (!test.all_hidden()) throw std::invalid_argument("total_effect: test records lack x_cf");
    const auto f = predict(factual_queries(test));
    const auto cf = predict(counterfactual_queries(test));
    return parallel::total_effect(f, cf, test.a_data());
}

Loss default_loss(Task task) { return task == Task::Regression ? Loss::Mse : Loss::CrossEntropy; }

EvalReport evaluate_predictions(std::span<const double> factual, std::span<const double> counterfactual,
                                const Dataset& test, Loss loss) {
    EvalReport r;
    r.task = test.task();
    r.loss = loss;
    r.n_test = test.size();
    r.error = parallel::mean_loss(factual, test.y_data(), loss);
    r.error_zero_one = test.task() == Task::Classification ? parallel::mean_loss(factual, test.y_data(), Loss::ZeroOne)
                                                            : r.error;
    const auto te = parallel::total_effect(factual, counterfactual, test.a_data());
    r.te = te.te;
    r.te0 = te.te0;
    r.te1 = te.te1;
    r.max_gap = te.max_gap;
    return r;
}

EvalReport evaluate(const FairMethod& method, const Dataset& test, Loss loss) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    const auto f = method.predict_batch(factual_queries(test));
    const auto cf = method.predict_batch(counterfactual_queries(test));
    return evaluate_predictions(f, cf, test, loss);
}

EvalReport evaluate(const FairMethod& method, const Dataset& test) {
    return evaluate(method, test, default_loss(test.task()));
}

}  // namespace pcf
