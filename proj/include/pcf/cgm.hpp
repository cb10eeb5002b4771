#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcf/scm.hpp"

namespace pcf {

/// Counterfactual generating mechanism g(x, a, a') -> x'.
///
/// Every kind is a pure function of (x, a, a'). The stochastic kinds derive
/// their noise from a hash of (seed, x bits, a, a'), so re-querying the same
/// point always yields the same counterfactual. g(x, a, a) = x for all kinds.
class Cgm {
public:
    enum class Kind { Oracle, NoisyOracle, BoundedNoisyOracle, MeanShift, RankPreserving };

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }

    std::vector<double> operator()(std::span<const double> x, int a, int a_prime) const;
    void apply(std::span<const double> x, int a, int a_prime, std::span<double> out) const;

    double beta() const { return beta_; }
    double alpha() const { return alpha_; }
    double eps0() const { return eps0_; }
    std::uint64_t seed() const { return seed_; }
    /// MeanShift: estimated mean(x | a=1) - mean(x | a=0). Oracle kinds: w_a.
    const std::vector<double>& shift() const { return shift_; }

    nlohmann::json to_json() const;
    static Cgm from_json(const nlohmann::json& j);

    friend Cgm oracle_cgm(const ScmSpec& spec);
    friend Cgm noisy_cgm(const Cgm& base, double beta, double alpha, std::uint64_t seed);
    friend Cgm bounded_noisy_cgm(const Cgm& base, double eps0, std::uint64_t seed);
    friend Cgm fit_meanshift_cgm(const Dataset& data);
    friend Cgm fit_rank_cgm(const Dataset& data);

private:
    Kind kind_ = Kind::Oracle;
    std::size_t dim_ = 1;
    std::vector<double> shift_;
    double beta_ = 0.0;
    double alpha_ = 0.0;
    double eps0_ = 0.0;
    std::uint64_t seed_ = 0;
    // RankPreserving: sorted x per group.
    std::vector<double> sorted_[2];

    std::uint64_t query_hash(std::span<const double> x, int a, int a_prime) const;
    double rank_map(double x, int a, int a_prime) const;
};

std::string to_string(Cgm::Kind k);

Cgm oracle_cgm(const ScmSpec& spec);
/// Oracle plus i.i.d. N(beta, alpha^2) per coordinate (alpha is the standard deviation).
Cgm noisy_cgm(const Cgm& base, double beta, double alpha, std::uint64_t seed);
/// Oracle plus a uniform draw from the Euclidean ball of radius eps0.
Cgm bounded_noisy_cgm(const Cgm& base, double eps0, std::uint64_t seed);
/// g(x, a, a') = x + delta (a' - a) with delta the difference of group means.
Cgm fit_meanshift_cgm(const Dataset& data);
/// Quantile transport between the two empirical group distributions (x_dim = 1).
Cgm fit_rank_cgm(const Dataset& data);

/// Per-group empirical CDF with linear interpolation between order statistics,
/// clamped to [0, 1]. `sorted` must be ascending.
double empirical_cdf(std::span<const double> sorted, double x);
/// Inverse of empirical_cdf, clamped to [min, max].
double empirical_quantile(std::span<const double> sorted, double p);

/// Estimator of the exogenous variable from an observed (x, a).
class UEstimator {
public:
    enum class Kind { OracleU, NoisyU, MeanShiftResidual };

    static UEstimator oracle();
    static UEstimator noisy(double beta, double alpha, std::uint64_t seed);
    /// Residual x - mean(x | a) with fitted group means; U scale fixed at 1.
    static UEstimator fit_meanshift_residual(const Dataset& data);

    Kind kind() const { return kind_; }
    double beta() const { return beta_; }
    double alpha() const { return alpha_; }

    /// `hidden_u` is required by OracleU and NoisyU.
    std::vector<double> estimate(std::span<const double> x, int a,
                                 std::optional<std::span<const double>> hidden_u) const;

    nlohmann::json to_json() const;

private:
    Kind kind_ = Kind::OracleU;
    double beta_ = 0.0;
    double alpha_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<double> mean_[2];
};

std::string to_string(UEstimator::Kind k);

/// Convenience over a dataset record (uses its hidden u when present).
std::vector<double> estimate_u(const UEstimator& est, const Dataset& data, std::size_t i);

}  // namespace pcf
