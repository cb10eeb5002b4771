#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pcf/features.hpp"

namespace pcf::mlp {

struct TrainingFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fully connected tanh network with a single output. With `logistic_output`
/// the output is sigmoid(z) and the loss is binary cross-entropy; otherwise
/// the output is z and the loss is half the mean squared error.
class Network {
public:
    Network() = default;
    /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Network(std::size_t in_dim, const std::vector<std::size_t>& hidden, bool logistic_output, std::uint64_t seed);

    std::size_t in_dim() const { return weights_.empty() ? 0 : static_cast<std::size_t>(weights_.front().cols()); }
    bool logistic_output() const { return logistic_; }
    std::size_t num_params() const;

    double predict(std::span<const double> x) const;
    std::vector<double> predict_batch(const FeatureMatrix& xs) const;

    /// Mean loss over the selected rows and its gradient w.r.t. the flat
    /// parameter vector (layer by layer: W row-major, then b).
    double loss_and_gradient(const FeatureMatrix& xs, std::span<const double> ys, std::span<const std::size_t> rows,
                             std::vector<double>& grad) const;
    double loss(const FeatureMatrix& xs, std::span<const double> ys, std::span<const std::size_t> rows) const;

    std::vector<double> flat_params() const;
    void set_flat_params(std::span<const double> p);

    nlohmann::json to_json() const;
    static Network from_json(const nlohmann::json& j);

private:
    std::vector<Eigen::MatrixXd> weights_;  // out x in
    std::vector<Eigen::VectorXd> biases_;
    bool logistic_ = false;

    Eigen::MatrixXd gather(const FeatureMatrix& xs, std::span<const std::size_t> rows) const;
};

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 200;
    std::size_t batch_size = 200;
    std::uint64_t seed = 0;
};

/// Mini-batch Adam. Batches come from a per-epoch shuffle driven by `seed`,
/// so training is bit-reproducible. Throws TrainingFailure on a non-finite loss.
void train(Network& net, const FeatureMatrix& xs, std::span<const double> ys, const AdamOptions& opt);

}  // namespace pcf::mlp
