#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pcf {

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length of the input, so serial and parallel callers that fill the same
/// buffer get bit-identical sums.
double pairwise_sum(std::span<const double> values);

inline double pairwise_mean(std::span<const double> values) {
    return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

/// Nodes and weights for integrating against the standard normal density:
/// E[f(Z)] ~= sum_i weights[i] * f(nodes[i]).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    double expectation(const std::function<double(double)>& f) const;
};

/// Builds (and caches per node count) the probabilists' Gauss-Hermite rule.
const GaussHermiteRule& gauss_hermite(int n_nodes);

struct GoldenSectionResult {
    double argmin;
    double value;
    int iterations;
};

/// Minimizes a unimodal f on [lo, hi]. Throws std::runtime_error when the
/// minimizer sits on the bracket boundary (bracket exhaustion).
GoldenSectionResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                            double tol = 1e-10);

// Seed plumbing. splitmix64 finalizer is used both for deriving independent
// sub-seeds and for hashing query points into noise streams.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);
std::uint64_t hash_doubles(std::uint64_t h, std::span<const double> values);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a, std::uint64_t tag_b = 0);

}  // namespace pcf
