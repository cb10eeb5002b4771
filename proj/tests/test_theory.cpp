#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "pcf/numeric.hpp"
#include "pcf/theory.hpp"

using namespace pcf;

TEST_CASE("regression excess risk closed forms") {
    auto lr = ScmSpec::preset("linear-reg");
    const auto e = excess_risk_regression(lr, 100000, 1);
    CHECK(e.value == doctest::Approx(0.25).epsilon(1e-12));
    lr.w_a = {0.0};
    CHECK(excess_risk_regression(lr, 1000, 1).value == 0.0);
    // 0.25 * E[(1 + 3u + 3u^2)^2] = 0.25 * 43
    const auto c = excess_risk_regression(ScmSpec::preset("cubic-reg"), 400000, 2);
    CHECK(std::abs(c.value - 10.75) <= 4 * c.std_error);
    CHECK(c.std_error < 0.1);
    CHECK_THROWS_AS(excess_risk_regression(ScmSpec::preset("linear-cls"), 10, 1), std::invalid_argument);
}

TEST_CASE("Monte Carlo means are identical serially and in parallel") {
    auto f = [](std::span<const double> u) { return std::exp(std::sin(u[0]) * u[1]); };
    const auto s = serial::mc_mean(f, 2, 50000, 3);
    const auto p = parallel::mc_mean(f, 2, 50000, 3);
    CHECK(std::memcmp(&s.value, &p.value, sizeof(double)) == 0);
    CHECK(s.std_error == p.std_error);
}

TEST_CASE("conditional mutual information bounds and degenerate case") {
    auto lc = ScmSpec::preset("linear-cls");
    const auto mi = cond_mutual_info(lc, 50000, 64, 4);
    CHECK(mi.value > 0.0);
    CHECK(mi.value <= std::log(2.0));
    lc.w_a = {0.0};
    CHECK(cond_mutual_info(lc, 1000, 64, 4).value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(bernoulli_kl(0.3, 0.3) == 0.0);
    CHECK(bernoulli_kl(0.9, 0.1) > 0.0);
}

TEST_CASE("conditional mutual information agrees with a nested Monte Carlo estimate") {
    // Outer draws of u, inner draws of eps_Y estimate q(u, a) by simulation;
    // no quadrature involved. Scaled down from 1e6 x 1e4 to keep the test fast.
    const auto spec = ScmSpec::preset("linear-cls");
    const std::size_t outer = 100000, inner = 2000;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd;
    std::vector<double> eps(inner);
    std::vector<double> terms(outer);
    for (std::size_t i = 0; i < outer; ++i) {
        const std::vector<double> u{nd(rng)};
        for (auto& e : eps) e = nd(rng);
        double q[2];
        for (int a : {0, 1}) {
            const double link = structural_link(spec, u, a);
            double s = 0.0;
            for (double e : eps) s += sigmoid(link + spec.w_y * e);
            q[a] = s / static_cast<double>(inner);
        }
        const double qbar = spec.p_a * q[1] + (1 - spec.p_a) * q[0];
        terms[i] = spec.p_a * bernoulli_kl(q[1], qbar) + (1 - spec.p_a) * bernoulli_kl(q[0], qbar);
    }
    const double nested = pairwise_mean(terms);
    const auto mi = cond_mutual_info(spec, 1000000, 64, 5);
    CHECK(std::abs(nested - mi.value) <= 0.02 * mi.value);
}

TEST_CASE("per-pair fair optimum matches the closed forms") {
    PairProblem pp{3.0, -1.0, 1.0, 0.3, 0.7};
    CHECK(std::abs(solve_fair_pair(pp, PairLoss::Squared) - 0.2) <= 1e-7);
    CHECK(std::abs(solve_crm_pair(pp, PairLoss::Squared) - 0.2) <= 1e-7);
    PairProblem single{2.5, -4.0, 1.0, 1.0, 0.0};
    CHECK(std::abs(solve_fair_pair(single, PairLoss::Squared) - 2.5) <= 1e-7);
    PairProblem prob{0.9, 0.2, 0.0, 0.4, 0.6};
    CHECK(std::abs(solve_fair_pair(prob, PairLoss::CrossEntropy) - (0.4 * 0.9 + 0.6 * 0.2)) <= 1e-7);
    PairProblem far{80.0, 70.0, 1.0, 0.5, 0.5};
    CHECK_THROWS_AS(solve_fair_pair(far, PairLoss::Squared), std::runtime_error);
}

TEST_CASE("fair oracle on a 51-node grid equals the probability mixture") {
    for (const auto& name : {"linear-reg", "linear-cls"}) {
        const auto spec = ScmSpec::preset(name);
        const auto d = discretize(spec, 51, 4.0);
        const auto loss = spec.task == Task::Regression ? PairLoss::Squared : PairLoss::CrossEntropy;
        const auto fair = fair_oracle_discrete(d, loss);
        const auto crm = crm_oracle_discrete(d, loss);
        for (std::size_t i = 0; i < d.u_grid.size(); ++i) {
            const std::vector<double> u{d.u_grid[i]};
            const double mix = spec.p_a * structural_y_mean(spec, u, 1) + (1 - spec.p_a) * structural_y_mean(spec, u, 0);
            CHECK(std::abs(fair[i] - mix) <= 1e-6);
            CHECK(std::abs(crm[i] - fair[i]) <= 1e-6);
        }
    }
}

TEST_CASE("Lipschitz constants") {
    CHECK(bayes_lipschitz_constant(ScmSpec::preset("linear-reg")) == doctest::Approx(2.0));
    CHECK(bayes_lipschitz_constant(ScmSpec::preset("linear-cls")) == doctest::Approx(0.5));
    CHECK_THROWS_AS(bayes_lipschitz_constant(ScmSpec::preset("cubic-reg")), std::invalid_argument);
}

TEST_CASE("bounded-noise PCF respects the TE and risk bounds") {
    const auto spec = ScmSpec::preset("linear-reg");
    LipschitzCheckOptions o;
    o.n_test = 50000;
    o.mc_n = 20000;
    const auto r = check_lipschitz_bound(spec, 0.1, 1, o);
    CHECK(r.passed());
    CHECK(r.bound_L == doctest::Approx(2.0));
    CHECK(r.observed_te_max <= 0.2);
    CHECK(r.risk_bound == doctest::Approx(0.11).epsilon(1e-9));

    const auto zero = check_lipschitz_bound(spec, 0.0, 2, o);
    CHECK(zero.passed());
    CHECK(zero.observed_te <= 1e-9);
    CHECK(zero.predicted_excess == doctest::Approx(0.25));

    o.lipschitz_scale = 0.5;  // negative control
    const auto bad = check_lipschitz_bound(spec, 0.1, 1, o);
    CHECK_FALSE(bad.passed());
}

TEST_CASE("theory report serializes its verdict") {
    TheoryReport r;
    r.name = "x";
    r.failures.push_back("boom");
    const nlohmann::json j = r;
    CHECK(j.at("passed").get<bool>() == false);
    CHECK(j.at("failures").size() == 1);
}
