#include "pcf/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pcf/numeric.hpp"

namespace pcf::mlp {

Network::Network(std::size_t in_dim, const std::vector<std::size_t>& hidden, bool logistic_output,
                 std::uint64_t seed)
    : logistic_(logistic_output) {
    if (in_dim == 0) throw std::invalid_argument("mlp: input dimension must be positive");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> widths{in_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        if (widths[l + 1] == 0) throw std::invalid_argument("mlp: layer widths must be positive");
        const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
        std::uniform_real_distribution<double> init(-bound, bound);
        Eigen::MatrixXd w(widths[l + 1], widths[l]);
        Eigen::VectorXd b(widths[l + 1]);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = init(rng);
        }
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = init(rng);
        weights_.push_back(std::move(w));
        biases_.push_back(std::move(b));
    }
}

std::size_t Network::num_params() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
}

Eigen::MatrixXd Network::gather(const FeatureMatrix& xs, std::span<const std::size_t> rows) const {
    if (xs.cols != in_dim()) throw std::invalid_argument("mlp: feature width mismatch");
    Eigen::MatrixXd x(xs.cols, rows.size());
    for (std::size_t c = 0; c < rows.size(); ++c) {
        const auto r = xs.row(rows[c]);
        for (std::size_t j = 0; j < xs.cols; ++j) x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = r[j];
    }
    return x;
}

double Network::predict(std::span<const double> x) const {
    if (x.size() != in_dim()) throw std::invalid_argument("mlp: feature width mismatch");
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Eigen::VectorXd z = weights_[l] * h + biases_[l];
        h = (l + 1 < weights_.size()) ? Eigen::VectorXd(z.array().tanh()) : z;
    }
    return logistic_ ? sigmoid(h(0)) : h(0);
}

std::vector<double> Network::predict_batch(const FeatureMatrix& xs) const {
    std::vector<double> out(xs.rows);
    const auto n = static_cast<std::ptrdiff_t>(xs.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = predict(xs.row(static_cast<std::size_t>(i)));
    return out;
}

namespace {

// Per-sample loss given output pre-activation z.
double sample_loss(double z, double y, bool logistic) {
    if (!logistic) return 0.5 * (z - y) * (z - y);
    // softplus(z) - y z, computed stably
    const double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return sp - y * z;
}

double sample_dloss(double z, double y, bool logistic) { return logistic ? sigmoid(z) - y : z - y; }

}  // namespace

double Network::loss_and_gradient(const FeatureMatrix& xs, std::span<const double> ys,
                                  std::span<const std::size_t> rows, std::vector<double>& grad) const {
    const std::size_t nl = weights_.size();
    const auto m = static_cast<double>(rows.size());
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[l] = output of layer l-1
    acts.reserve(nl + 1);
    acts.push_back(gather(xs, rows));
    for (std::size_t l = 0; l < nl; ++l) {
        Eigen::MatrixXd z = (weights_[l] * acts.back()).colwise() + biases_[l];
        if (l + 1 < nl) z = z.array().tanh();
        acts.push_back(std::move(z));
    }
    const Eigen::MatrixXd& out = acts.back();
    Eigen::MatrixXd delta(1, static_cast<Eigen::Index>(rows.size()));
    double total = 0.0;
    for (std::size_t c = 0; c < rows.size(); ++c) {
        const double z = out(0, static_cast<Eigen::Index>(c));
        const double y = ys[rows[c]];
        total += sample_loss(z, y, logistic_);
        delta(0, static_cast<Eigen::Index>(c)) = sample_dloss(z, y, logistic_) / m;
    }

    grad.assign(num_params(), 0.0);
    std::vector<std::size_t> offsets(nl);
    std::size_t off = 0;
    for (std::size_t l = 0; l < nl; ++l) {
        offsets[l] = off;
        off += weights_[l].size() + biases_[l].size();
    }
    for (std::size_t li = nl; li-- > 0;) {
        const Eigen::MatrixXd gw = delta * acts[li].transpose();
        const Eigen::VectorXd gb = delta.rowwise().sum();
        std::size_t p = offsets[li];
        for (Eigen::Index r = 0; r < gw.rows(); ++r) {
            for (Eigen::Index c = 0; c < gw.cols(); ++c) grad[p++] = gw(r, c);
        }
        for (Eigen::Index r = 0; r < gb.size(); ++r) grad[p++] = gb(r);
        if (li > 0) {
            const Eigen::MatrixXd back = weights_[li].transpose() * delta;
            delta = back.array() * (1.0 - acts[li].array().square());
        }
    }
    return total / m;
}

double Network::loss(const FeatureMatrix& xs, std::span<const double> ys, std::span<const std::size_t> rows) const {
    Eigen::MatrixXd h = gather(xs, rows);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Eigen::MatrixXd z = (weights_[l] * h).colwise() + biases_[l];
        h = (l + 1 < weights_.size()) ? Eigen::MatrixXd(z.array().tanh()) : z;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < rows.size(); ++c) total += sample_loss(h(0, static_cast<Eigen::Index>(c)), ys[rows[c]], logistic_);
    return total / static_cast<double>(rows.size());
}

std::vector<double> Network::flat_params() const {
    std::vector<double> p;
    p.reserve(num_params());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (Eigen::Index r = 0; r < weights_[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) p.push_back(weights_[l](r, c));
        }
        for (Eigen::Index r = 0; r < biases_[l].size(); ++r) p.push_back(biases_[l](r));
    }
    return p;
}

void Network::set_flat_params(std::span<const double> p) {
    if (p.size() != num_params()) throw std::invalid_argument("mlp: parameter count mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (Eigen::Index r = 0; r < weights_[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) weights_[l](r, c) = p[k++];
        }
        for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l](r) = p[k++];
    }
}

nlohmann::json Network::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        std::vector<double> w;
        for (Eigen::Index r = 0; r < weights_[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) w.push_back(weights_[l](r, c));
        }
        std::vector<double> b(biases_[l].data(), biases_[l].data() + biases_[l].size());
        layers.push_back({{"rows", weights_[l].rows()}, {"cols", weights_[l].cols()}, {"weights", w}, {"bias", b}});
    }
    return {{"logistic_output", logistic_}, {"layers", layers}};
}

Network Network::from_json(const nlohmann::json& j) {
    Network net;
    net.logistic_ = j.at("logistic_output").get<bool>();
    for (const auto& layer : j.at("layers")) {
        const auto rows = layer.at("rows").get<Eigen::Index>();
        const auto cols = layer.at("cols").get<Eigen::Index>();
        const auto w = layer.at("weights").get<std::vector<double>>();
        const auto b = layer.at("bias").get<std::vector<double>>();
        if (w.size() != static_cast<std::size_t>(rows * cols) || b.size() != static_cast<std::size_t>(rows)) {
            throw std::invalid_argument("mlp: malformed layer");
        }
        Eigen::MatrixXd wm(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) wm(r, c) = w[static_cast<std::size_t>(r * cols + c)];
        }
        net.weights_.push_back(std::move(wm));
        net.biases_.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
    }
    return net;
}

void train(Network& net, const FeatureMatrix& xs, std::span<const double> ys, const AdamOptions& opt) {
    if (xs.rows != ys.size()) throw std::invalid_argument("mlp::train: feature/label count mismatch");
    if (opt.batch_size == 0 || opt.epochs == 0) throw std::invalid_argument("mlp::train: counts must be positive");
    if (xs.rows < opt.batch_size) throw std::invalid_argument("mlp::train: fewer samples than the batch size");

    std::vector<double> params = net.flat_params();
    std::vector<double> m1(params.size(), 0.0);
    std::vector<double> m2(params.size(), 0.0);
    std::vector<double> grad;
    std::vector<std::size_t> order(xs.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(opt.seed);
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t len = std::min(opt.batch_size, order.size() - start);
            const std::span<const std::size_t> batch(order.data() + start, len);
            const double l = net.loss_and_gradient(xs, ys, batch, grad);
            if (!std::isfinite(l)) {
                throw TrainingFailure("mlp::train: non-finite loss at epoch " + std::to_string(epoch));
            }
            ++step;
            const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < params.size(); ++k) {
                m1[k] = opt.beta1 * m1[k] + (1.0 - opt.beta1) * grad[k];
                m2[k] = opt.beta2 * m2[k] + (1.0 - opt.beta2) * grad[k] * grad[k];
                params[k] -= opt.learning_rate * (m1[k] / bc1) / (std::sqrt(m2[k] / bc2) + opt.epsilon);
            }
            net.set_flat_params(params);
        }
    }
}

}  // namespace pcf::mlp
