#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "pcf/cgm.hpp"
#include "pcf/numeric.hpp"
#include "pcf/scm.hpp"

using namespace pcf;

namespace {

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 2.0);
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
        for (auto& v : p) v = nd(rng);
    return pts;
}

}  // namespace

TEST_CASE("oracle cgm inverts the linear model by hand") {
    const Cgm g = oracle_cgm(ScmSpec::preset("linear-reg"));
    CHECK(g(std::vector<double>{2.0}, 1, 0)[0] == doctest::Approx(1.0));
    CHECK(g(std::vector<double>{2.0}, 1, 1)[0] == 2.0);
    CHECK(g(std::vector<double>{-0.5}, 0, 1)[0] == doctest::Approx(0.5));
}

TEST_CASE("oracle cgm is an involution") {
    const auto spec = ScmSpec::preset("linear-reg-3d");
    const Cgm g = oracle_cgm(spec);
    const auto pts = random_points(10000, 3, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const int a = static_cast<int>(i % 2);
        const auto back = g(g(pts[i], a, 1 - a), 1 - a, a);
        for (std::size_t j = 0; j < 3; ++j) worst = std::max(worst, std::abs(back[j] - pts[i][j]));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("noisy cgm: zero noise, pure shift and noise scale") {
    const auto spec = ScmSpec::preset("linear-reg");
    const Cgm o = oracle_cgm(spec);
    const Cgm zero = noisy_cgm(o, 0.0, 0.0, 9);
    const Cgm shift = noisy_cgm(o, 0.3, 0.0, 9);
    const Cgm noisy = noisy_cgm(o, 0.0, 0.1, 9);
    const auto pts = random_points(100000, 1, 2);
    std::vector<double> diffs;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const int a = static_cast<int>(i % 2);
        const double ref = o(pts[i], a, 1 - a)[0];
        if (i < 1000) {
            CHECK(zero(pts[i], a, 1 - a)[0] == ref);
            CHECK(shift(pts[i], a, 1 - a)[0] == doctest::Approx(ref + 0.3));
        }
        diffs.push_back(noisy(pts[i], a, 1 - a)[0] - ref);
    }
    const double m = pairwise_mean(diffs);
    double v = 0.0;
    for (double d : diffs) v += (d - m) * (d - m);
    CHECK(std::sqrt(v / (diffs.size() - 1)) == doctest::Approx(0.1).epsilon(0.02));
    CHECK_THROWS_AS(noisy_cgm(o, 0.0, -1.0, 1), std::invalid_argument);
}

TEST_CASE("noisy cgm answers repeated queries identically and leaves a' = a alone") {
    const Cgm n = noisy_cgm(oracle_cgm(ScmSpec::preset("linear-reg")), 0.1, 0.5, 3);
    const std::vector<double> x{0.25};
    CHECK(n(x, 0, 1)[0] == n(x, 0, 1)[0]);
    CHECK(n(x, 0, 0)[0] == 0.25);
    const Cgm other_seed = noisy_cgm(oracle_cgm(ScmSpec::preset("linear-reg")), 0.1, 0.5, 4);
    CHECK(n(x, 0, 1)[0] != other_seed(x, 0, 1)[0]);
}

TEST_CASE("bounded noise never leaves the eps0 ball") {
    const auto spec = ScmSpec::preset("linear-reg-3d");
    const Cgm o = oracle_cgm(spec);
    CHECK(bounded_noisy_cgm(o, 0.0, 1)(std::vector<double>{1, 2, 3}, 1, 0) == o(std::vector<double>{1, 2, 3}, 1, 0));
    for (double eps0 : {0.05, 0.2}) {
        const Cgm b = bounded_noisy_cgm(o, eps0, 5);
        const auto pts = random_points(100000, 3, 6);
        double worst = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const int a = static_cast<int>(i % 2);
            const auto r = o(pts[i], a, 1 - a);
            const auto e = b(pts[i], a, 1 - a);
            double s = 0.0;
            for (std::size_t j = 0; j < 3; ++j) s += (r[j] - e[j]) * (r[j] - e[j]);
            worst = std::max(worst, std::sqrt(s));
        }
        CHECK(worst <= eps0);
        CHECK(worst > 0.9 * eps0);
    }
    CHECK_THROWS_AS(bounded_noisy_cgm(o, -0.1, 1), std::invalid_argument);
}

TEST_CASE("mean-shift recovers w_a on linear data") {
    const auto d = sample(ScmSpec::preset("linear-reg"), 100000, 7);
    const Cgm m = fit_meanshift_cgm(d);
    CHECK(std::abs(m.shift()[0] - 1.0) < 0.05);
    CHECK(m(std::vector<double>{0.4}, 0, 1)[0] == doctest::Approx(0.4 + m.shift()[0]));
    CHECK(m(std::vector<double>{0.4}, 1, 1)[0] == 0.4);
}

TEST_CASE("rank-preserving map is the identity for a' = a and monotone across groups") {
    const auto d = sample(ScmSpec::preset("linear-reg"), 2000, 8);
    const Cgm r = fit_rank_cgm(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(std::abs(r(d.x(i), d.a(i), d.a(i))[0] - d.x(i)[0]) < 1e-9);
    }
    double prev = -INFINITY;
    for (double x = -3.0; x <= 3.0; x += 0.1) {
        const double v = r(std::vector<double>{x}, 0, 1)[0];
        CHECK(v >= prev);
        prev = v;
    }
    // on the linear model the transport is close to the oracle shift
    CHECK(r(std::vector<double>{0.0}, 0, 1)[0] == doctest::Approx(1.0).epsilon(0.1));
    CHECK_THROWS_AS(fit_rank_cgm(sample(ScmSpec::preset("linear-reg-3d"), 100, 1)), std::invalid_argument);
}

TEST_CASE("empirical quantile inverts the empirical cdf") {
    const std::vector<double> s{0.0, 1.0, 2.0, 4.0};
    CHECK(empirical_cdf(s, -1.0) == 0.0);
    CHECK(empirical_cdf(s, 10.0) == 1.0);
    for (double x : {0.5, 1.5, 3.0}) CHECK(empirical_quantile(s, empirical_cdf(s, x)) == doctest::Approx(x));
}

TEST_CASE("cgm JSON round-trip keeps the kind and the noise stream") {
    const Cgm n = noisy_cgm(oracle_cgm(ScmSpec::preset("linear-reg")), 0.2, 0.3, 77);
    const Cgm back = Cgm::from_json(n.to_json());
    CHECK(back.kind() == Cgm::Kind::NoisyOracle);
    const std::vector<double> x{1.1};
    CHECK(back(x, 1, 0)[0] == n(x, 1, 0)[0]);
}

TEST_CASE("u estimators") {
    const std::vector<double> x{1.7}, u{0.7};
    CHECK(UEstimator::oracle().estimate(x, 1, std::span<const double>(u))[0] == 0.7);
    CHECK(UEstimator::noisy(0.0, 0.0, 3).estimate(x, 1, std::span<const double>(u))[0] == 0.7);
    CHECK_THROWS_AS(UEstimator::oracle().estimate(x, 1, std::nullopt), std::invalid_argument);
    const auto d = sample(ScmSpec::preset("linear-reg"), 100000, 9);
    const auto ms = UEstimator::fit_meanshift_residual(d);
    double err = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) err = std::max(err, std::abs(estimate_u(ms, d, i)[0] - d.u(i)[0]));
    CHECK(err < 0.05);
}
