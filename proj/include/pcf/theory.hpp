#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcf/scm.hpp"

namespace pcf {

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Monte Carlo mean of f(u) over u ~ N(0, I_dim). The draws are generated
/// serially from `seed`; only the evaluations are parallel, so both variants
/// return identical estimates.
namespace serial {
McEstimate mc_mean(const std::function<double(std::span<const double>)>& f, std::size_t dim, std::size_t n,
                   std::uint64_t seed);
}
namespace parallel {
McEstimate mc_mean(const std::function<double(std::span<const double>)>& f, std::size_t dim, std::size_t n,
                   std::uint64_t seed);
}

/// p_a (1 - p_a) E_U[(E[Y|U,A=1] - E[Y|U,A=0])^2]; regression only.
McEstimate excess_risk_regression(const ScmSpec& spec, std::size_t mc_n, std::uint64_t seed);

/// E_U |E[Y|U,A=1] - E[Y|U,A=0]|.
McEstimate mean_abs_group_gap(const ScmSpec& spec, std::size_t mc_n, std::uint64_t seed,
                              int quad_nodes = kDefaultQuadNodes);

/// KL(Bernoulli(p) || Bernoulli(q)) in nats.
double bernoulli_kl(double p, double q);

/// I(A; Y | U) = E_U sum_a p(a) KL(Bern(q(U,a)) || Bern(qbar(U))); classification only.
McEstimate cond_mutual_info(const ScmSpec& spec, std::size_t mc_n, int quad_nodes, std::uint64_t seed);

enum class PairLoss { Squared, CrossEntropy };

/// Expected loss of a constant prediction c for Y | (u, a) with conditional
/// mean `mean` (and, for squared loss, conditional variance `var`).
double expected_pair_loss(double c, double mean, double var, PairLoss loss);

struct PairProblem {
    double mean_a = 0.0;     // E[Y | u, a]
    double mean_other = 0.0; // E[Y | u, 1 - a]
    double var = 0.0;        // Var(Y | u, .) for squared loss
    double weight_a = 0.5;   // p(A = a)
    double weight_other = 0.5;
};

/// argmin_c  w_a E[l(c,Y)|u,a] + w_o E[l(c,Y)|u,1-a]  by golden section.
double solve_fair_pair(const PairProblem& pp, PairLoss loss, double tol = 1e-10);
/// argmin_c of the CRM objective restricted to one counterfactual pair:
///   w_a E[l|u,a] + w_o E[l|u,1-a] + w_a E[l|u,a] + w_o E[l|u,1-a].
double solve_crm_pair(const PairProblem& pp, PairLoss loss, double tol = 1e-10);

inline constexpr double kRegressionBracket = 50.0;
inline constexpr double kProbBracket = 1e-6;

/// Optimal fair prediction at every grid node (decomposed per-pair problem).
std::vector<double> fair_oracle_discrete(const DiscreteScm& d, PairLoss loss, double tol = 1e-10);
std::vector<double> crm_oracle_discrete(const DiscreteScm& d, PairLoss loss, double tol = 1e-10);

struct TheoryReport {
    std::string name;
    double predicted_excess = 0.0;   // closed-form fairness excess risk over the Bayes risk
    double empirical_excess = 0.0;   // measured risk(PCF) - risk(Bayes)
    double relative_gap = 0.0;
    double excess_over_fair = 0.0;   // measured risk(PCF with estimated CGM) - risk(PCF with oracle CGM)
    double risk_bound = 0.0;         // bound on excess_over_fair
    double bound_L = 0.0;
    double bound_eps = 0.0;
    double observed_te = 0.0;
    double observed_te_max = 0.0;
    std::size_t n_test = 0;
    std::vector<std::string> failures;
    std::vector<std::string> notes;

    bool passed() const { return failures.empty(); }
};

void to_json(nlohmann::json& j, const TheoryReport& r);

/// Lipschitz constant in x of the Bayes predictor for linear-form SCMs
/// (sigmoid slope 1/4 folded in for classification). Throws for cubic forms.
double bayes_lipschitz_constant(const ScmSpec& spec);

struct LipschitzCheckOptions {
    std::size_t n_test = 100000;
    std::size_t mc_n = 100000;
    /// Multiplies the exact Lipschitz constant; < 1 is a negative control.
    double lipschitz_scale = 1.0;
    double abs_tol = 1e-12;
};

/// PCF with the analytic Bayes predictor and a bounded-noise CGM of radius
/// eps0. Asserts TE <= L eps0 (mean and max over pairs) and, for regression,
/// risk(PCF, bounded) - risk(PCF, oracle) <= p(1-p) L^2 eps0^2 + 2 p(1-p) L eps0 E|gap|.
TheoryReport check_lipschitz_bound(const ScmSpec& spec, double eps0, std::uint64_t seed,
                                   const LipschitzCheckOptions& opt = {});

}  // namespace pcf
