#include "pcf/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pcf/cgm.hpp"
#include "pcf/fair_methods.hpp"
#include "pcf/metrics.hpp"
#include "pcf/numeric.hpp"
#include "pcf/predictor.hpp"

namespace pcf {

namespace {

std::vector<double> draw_normals(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(count);
    for (auto& v : z) v = normal(rng);
    return z;
}

McEstimate summarize(const std::vector<double>& vals) {
    McEstimate est;
    est.n = vals.size();
    est.value = pairwise_mean(vals);
    if (vals.size() > 1) {
        std::vector<double> dev(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) dev[i] = (vals[i] - est.value) * (vals[i] - est.value);
        const double var = pairwise_sum(dev) / static_cast<double>(vals.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(vals.size()));
    }
    return est;
}

}  // namespace

namespace serial {

McEstimate mc_mean(const std::function<double(std::span<const double>)>& f, std::size_t dim, std::size_t n,
                   std::uint64_t seed) {
    if (n == 0 || dim == 0) throw std::invalid_argument("mc_mean: sample count and dimension must be positive");
    const auto z = draw_normals(n * dim, seed);
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = f(std::span<const double>(z.data() + i * dim, dim));
    return summarize(vals);
}

}  // namespace serial

namespace parallel {

McEstimate mc_mean(const std::function<double(std::span<const double>)>& f, std::size_t dim, std::size_t n,
                   std::uint64_t seed) {
    if (n == 0 || dim == 0) throw std::invalid_argument("mc_mean: sample count and dimension must be positive");
    const auto z = draw_normals(n * dim, seed);
    std::vector<double> vals(n);
    const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < nn; ++i) {
        const auto k = static_cast<std::size_t>(i);
        vals[k] = f(std::span<const double>(z.data() + k * dim, dim));
    }
    return summarize(vals);
}

}  // namespace parallel

McEstimate excess_risk_regression(const ScmSpec& spec, std::size_t mc_n, std::uint64_t seed) {
    spec.validate();
    if (spec.task != Task::Regression) throw std::invalid_argument("excess_risk_regression: regression task required");
    const double var_a = spec.p_a * (1.0 - spec.p_a);
    return parallel::mc_mean(
        [&](std::span<const double> u) {
            const double gap = structural_y_mean(spec, u, 1) - structural_y_mean(spec, u, 0);
            return var_a * gap * gap;
        },
        spec.x_dim(), mc_n, seed);
}

McEstimate mean_abs_group_gap(const ScmSpec& spec, std::size_t mc_n, std::uint64_t seed, int quad_nodes) {
    spec.validate();
    return parallel::mc_mean(
        [&](std::span<const double> u) {
            return std::abs(structural_y_mean(spec, u, 1, quad_nodes) - structural_y_mean(spec, u, 0, quad_nodes));
        },
        spec.x_dim(), mc_n, seed);
}

double bernoulli_kl(double p, double q) {
    auto term = [](double a, double b) { return a > 0.0 ? a * std::log(a / b) : 0.0; };
    return term(p, q) + term(1.0 - p, 1.0 - q);
}

McEstimate cond_mutual_info(const ScmSpec& spec, std::size_t mc_n, int quad_nodes, std::uint64_t seed) {
    spec.validate();
    if (spec.task != Task::Classification) throw std::invalid_argument("cond_mutual_info: classification task required");
    const double p1 = spec.p_a;
    const double p0 = 1.0 - p1;
    return parallel::mc_mean(
        [&](std::span<const double> u) {
            const double q1 = structural_y_mean(spec, u, 1, quad_nodes);
            const double q0 = structural_y_mean(spec, u, 0, quad_nodes);
            const double qbar = p1 * q1 + p0 * q0;
            return p1 * bernoulli_kl(q1, qbar) + p0 * bernoulli_kl(q0, qbar);
        },
        spec.x_dim(), mc_n, seed);
}

double expected_pair_loss(double c, double mean, double var, PairLoss loss) {
    if (loss == PairLoss::Squared) return (c - mean) * (c - mean) + var;
    return -(mean * std::log(c) + (1.0 - mean) * std::log(1.0 - c));
}

namespace {

double solve(const std::function<double(double)>& objective, PairLoss loss, double tol) {
    if (loss == PairLoss::Squared) {
        return golden_section_minimize(objective, -kRegressionBracket, kRegressionBracket, tol).argmin;
    }
    return golden_section_minimize(objective, kProbBracket, 1.0 - kProbBracket, tol).argmin;
}

PairProblem node_problem(const DiscreteScm& d, std::size_t i, PairLoss loss) {
    const std::vector<double> u{d.u_grid[i]};
    PairProblem pp;
    pp.mean_a = structural_y_mean(d.spec, u, 1);
    pp.mean_other = structural_y_mean(d.spec, u, 0);
    pp.weight_a = d.spec.p_a;
    pp.weight_other = 1.0 - d.spec.p_a;
    pp.var = loss == PairLoss::Squared ? d.spec.w_y * d.spec.w_y : 0.0;
    return pp;
}

}  // namespace

double solve_fair_pair(const PairProblem& pp, PairLoss loss, double tol) {
    return solve(
        [&](double c) {
            return pp.weight_a * expected_pair_loss(c, pp.mean_a, pp.var, loss) +
                   pp.weight_other * expected_pair_loss(c, pp.mean_other, pp.var, loss);
        },
        loss, tol);
}

double solve_crm_pair(const PairProblem& pp, PairLoss loss, double tol) {
    return solve(
        [&](double c) {
            const double factual = pp.weight_a * expected_pair_loss(c, pp.mean_a, pp.var, loss) +
                                   pp.weight_other * expected_pair_loss(c, pp.mean_other, pp.var, loss);
            const double generated = pp.weight_a * expected_pair_loss(c, pp.mean_a, pp.var, loss) +
                                     pp.weight_other * expected_pair_loss(c, pp.mean_other, pp.var, loss);
            return factual + generated;
        },
        loss, tol);
}

std::vector<double> fair_oracle_discrete(const DiscreteScm& d, PairLoss loss, double tol) {
    if (d.u_grid.size() < 3) throw std::invalid_argument("fair_oracle_discrete: grid too small");
    std::vector<double> out(d.u_grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = solve_fair_pair(node_problem(d, i, loss), loss, tol);
    return out;
}

std::vector<double> crm_oracle_discrete(const DiscreteScm& d, PairLoss loss, double tol) {
    if (d.u_grid.size() < 3) throw std::invalid_argument("crm_oracle_discrete: grid too small");
    std::vector<double> out(d.u_grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = solve_crm_pair(node_problem(d, i, loss), loss, tol);
    return out;
}

void to_json(nlohmann::json& j, const TheoryReport& r) {
    j = nlohmann::json{{"name", r.name},
                       {"predicted_excess", r.predicted_excess},
                       {"empirical_excess", r.empirical_excess},
                       {"relative_gap", r.relative_gap},
                       {"excess_over_fair", r.excess_over_fair},
                       {"risk_bound", r.risk_bound},
                       {"bound_L", r.bound_L},
                       {"bound_eps", r.bound_eps},
                       {"observed_te", r.observed_te},
                       {"observed_te_max", r.observed_te_max},
                       {"n_test", r.n_test},
                       {"passed", r.passed()},
                       {"failures", r.failures},
                       {"notes", r.notes}};
}

double bayes_lipschitz_constant(const ScmSpec& spec) {
    spec.validate();
    if (spec.form != Form::Linear) {
        throw std::invalid_argument("bayes_lipschitz_constant: cubic Bayes predictors are not globally Lipschitz");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < spec.x_dim(); ++j) {
        const double g = spec.w_x[j] + spec.w_u_prime[j] / spec.w_u[j];
        s += g * g;
    }
    const double logit_l = std::sqrt(s);
    return spec.task == Task::Regression ? logit_l : 0.25 * logit_l;
}

TheoryReport check_lipschitz_bound(const ScmSpec& spec, double eps0, std::uint64_t seed,
                                   const LipschitzCheckOptions& opt) {
    spec.validate();
    if (!(eps0 >= 0.0)) throw std::invalid_argument("check_lipschitz_bound: eps0 must be non-negative");
    TheoryReport rep;
    rep.name = "lipschitz_bound";
    rep.bound_eps = eps0;
    rep.bound_L = bayes_lipschitz_constant(spec) * opt.lipschitz_scale;

    const Dataset test = sample(spec, opt.n_test, derive_seed(seed, 0x7e57));
    rep.n_test = test.size();
    const auto mode = spec.task == Task::Regression ? AnalyticMode::ClosedForm : AnalyticMode::ExactQuadrature;
    auto phi = std::make_shared<const Predictor>(analytic_bayes(spec, mode));
    const Cgm oracle = oracle_cgm(spec);
    const Cgm bounded = bounded_noisy_cgm(oracle, eps0, derive_seed(seed, 0xb0d));

    const FairMethod bayes({MethodKind::Erm, phi, std::nullopt, std::nullopt, spec.p_a, 1.0, nullptr});
    const FairMethod pcf_oracle({MethodKind::PcfAna, phi, oracle, std::nullopt, spec.p_a, 1.0, nullptr});
    const FairMethod pcf_bounded({MethodKind::PcfAna, phi, bounded, std::nullopt, spec.p_a, 1.0, nullptr});

    const auto fq = factual_queries(test);
    const auto cq = counterfactual_queries(test);
    const auto y_bayes = bayes.predict_batch(fq);
    const auto y_or = pcf_oracle.predict_batch(fq);
    const auto y_b = pcf_bounded.predict_batch(fq);
    const auto y_b_cf = pcf_bounded.predict_batch(cq);

    const Loss loss = default_loss(spec.task);
    const auto te = parallel::total_effect(y_b, y_b_cf, test.a_data());
    rep.observed_te = te.te;
    rep.observed_te_max = te.max_gap;

    const double te_bound = rep.bound_L * eps0;
    if (te.te > te_bound + opt.abs_tol) {
        rep.failures.push_back("TE " + std::to_string(te.te) + " exceeds L*eps0 = " + std::to_string(te_bound));
    }
    if (te.max_gap > te_bound + opt.abs_tol) {
        rep.failures.push_back("max pairwise gap " + std::to_string(te.max_gap) + " exceeds L*eps0 = " +
                               std::to_string(te_bound));
    }

    // per-sample loss differences
    std::vector<double> d_bayes(test.size()), d_fair(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double lb = pointwise_loss(y_b[i], test.y(i), loss);
        d_bayes[i] = lb - pointwise_loss(y_bayes[i], test.y(i), loss);
        d_fair[i] = lb - pointwise_loss(y_or[i], test.y(i), loss);
    }
    const McEstimate emp = summarize(d_bayes);
    rep.empirical_excess = emp.value;
    rep.excess_over_fair = pairwise_mean(d_fair);

    const double var_a = spec.p_a * (1.0 - spec.p_a);
    McEstimate predicted;
    if (spec.task == Task::Regression) {
        predicted = excess_risk_regression(spec, opt.mc_n, derive_seed(seed, 0x3c));
        const McEstimate gap = mean_abs_group_gap(spec, opt.mc_n, derive_seed(seed, 0x3d));
        rep.risk_bound = var_a * rep.bound_L * rep.bound_L * eps0 * eps0 + 2.0 * var_a * rep.bound_L * eps0 * gap.value;
        if (rep.excess_over_fair > rep.risk_bound + opt.abs_tol) {
            rep.failures.push_back("excess risk over the fair optimum " + std::to_string(rep.excess_over_fair) +
                                   " exceeds bound " + std::to_string(rep.risk_bound));
        }
    } else {
        predicted = cond_mutual_info(spec, opt.mc_n, kDefaultQuadNodes, derive_seed(seed, 0x3c));
        // Cross-entropy bound uses the logit Lipschitz constant; reported only.
        rep.risk_bound = 4.0 * rep.bound_L * eps0;
        rep.notes.push_back("classification risk bound is diagnostic only (logit Lipschitz assumption)");
    }
    rep.predicted_excess = predicted.value;
    rep.relative_gap = predicted.value != 0.0 ? (rep.empirical_excess - predicted.value) / predicted.value
                                              : rep.empirical_excess;
    if (eps0 == 0.0) {
        const double se = std::sqrt(emp.std_error * emp.std_error + predicted.std_error * predicted.std_error);
        const double tol = 4.0 * se + 1e-12;
        if (std::abs(rep.empirical_excess - predicted.value) > tol) {
            rep.failures.push_back("with eps0 = 0 the measured excess " + std::to_string(rep.empirical_excess) +
                                   " differs from the closed form " + std::to_string(predicted.value) +
                                   " by more than 4 standard errors");
        }
    }
    return rep;
}

}  // namespace pcf
