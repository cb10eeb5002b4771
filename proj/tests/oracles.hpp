#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "pcf/mlp.hpp"
#include "pcf/numeric.hpp"
#include "pcf/scm.hpp"

namespace pcf::oracles {

/// ||backprop - central differences|| / max(||backprop||, ||central differences||) over all parameters.
inline double gradient_rel_error(mlp::Network net, const FeatureMatrix& xs, const std::vector<double>& ys,
                                 double h = 1e-6) {
    std::vector<std::size_t> rows(xs.rows);
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> g;
    net.loss_and_gradient(xs, ys, rows, g);
    auto p = net.flat_params();
    std::vector<double> fd(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        net.set_flat_params(p);
        const double up = net.loss(xs, ys, rows);
        p[i] = keep - h;
        net.set_flat_params(p);
        const double down = net.loss(xs, ys, rows);
        p[i] = keep;
        fd[i] = (up - down) / (2 * h);
    }
    net.set_flat_params(p);
    double num = 0.0, den_a = 0.0, den_b = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        num += (g[i] - fd[i]) * (g[i] - fd[i]);
        den_a += g[i] * g[i];
        den_b += fd[i] * fd[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(std::max(den_a, den_b)), 1e-300);
}

/// Worst gradient error over `points` random initializations of a (20, 20)
/// network on a 10-sample batch, regression and classification heads.
inline double worst_gradient_error(std::size_t points, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    FeatureMatrix xs(10, 2);
    for (auto& v : xs.data) v = nd(rng);
    std::vector<double> y_reg(10), y_cls(10);
    for (std::size_t i = 0; i < 10; ++i) {
        y_reg[i] = nd(rng);
        y_cls[i] = static_cast<double>(i % 2);
    }
    double worst = 0.0;
    for (std::uint64_t s = 0; s < points; ++s) {
        worst = std::max(worst, gradient_rel_error(mlp::Network(2, {20, 20}, false, seed + s), xs, y_reg));
        worst = std::max(worst, gradient_rel_error(mlp::Network(2, {20, 20}, true, seed + 1000 + s), xs, y_cls));
    }
    return worst;
}

/// E[Y | u, a] by direct simulation of eps_Y.
inline double simulated_y_mean(const ScmSpec& spec, std::span<const double> u, int a, std::size_t draws,
                               std::uint64_t seed) {
    const double link = structural_link(spec, u, a);
    if (spec.task == Task::Regression) return link;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> v(draws);
    for (auto& x : v) x = sigmoid(link + spec.w_y * nd(rng));
    return pairwise_mean(v);
}

}  // namespace pcf::oracles
