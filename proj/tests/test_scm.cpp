#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pcf/dataset_io.hpp"
#include "pcf/numeric.hpp"
#include "pcf/scm.hpp"

using namespace pcf;

TEST_CASE("presets carry the documented weights") {
    const auto lr = ScmSpec::preset("linear-reg");
    CHECK(lr.form == Form::Linear);
    CHECK(lr.task == Task::Regression);
    CHECK(lr.w_a[0] == 1.0);
    CHECK(lr.p_a == 0.5);
    const auto lc = ScmSpec::preset("linear-cls");
    CHECK(lc.task == Task::Classification);
    CHECK(lc.w_a[0] == 2.0);
    CHECK(ScmSpec::preset("cubic-cls").w_a[0] == 2.0);
    CHECK(ScmSpec::preset("cubic-reg").form == Form::Cubic);
    CHECK(ScmSpec::preset("linear-reg-3d").x_dim() == 3);
    CHECK_THROWS_AS(ScmSpec::preset("nope"), std::invalid_argument);
}

TEST_CASE("validate rejects inconsistent specs") {
    auto s = ScmSpec::preset("linear-reg");
    s.w_u = {0.0};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = ScmSpec::preset("linear-reg");
    s.p_a = 1.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = ScmSpec::preset("linear-reg");
    s.w_x = {1.0, 2.0};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("spec JSON round-trips and accepts presets with overrides") {
    const auto s = ScmSpec::preset("linear-reg-3d");
    const nlohmann::json j = s;
    const auto back = j.get<ScmSpec>();
    CHECK(back.w_a == s.w_a);
    CHECK(back.w_u_prime == s.w_u_prime);
    const auto o = nlohmann::json{{"preset", "linear-reg"}, {"w_a", 0.0}}.get<ScmSpec>();
    CHECK(o.w_a == std::vector<double>{0.0});
    CHECK(o.w_x == std::vector<double>{1.0});
}

TEST_CASE("all-ones linear-reg record for u = 0.3, a = 1, eps = 0") {
    const auto spec = ScmSpec::preset("linear-reg");
    const std::vector<double> u{0.3};
    const Record r = make_record(spec, u, 1, 0.0);
    CHECK(r.x[0] == doctest::Approx(1.3));
    CHECK(r.y == doctest::Approx(1.6));
    CHECK((*r.x_cf)[0] == doctest::Approx(0.3));
}

TEST_CASE("sampling is deterministic in the seed") {
    const auto spec = ScmSpec::preset("cubic-cls");
    const auto d1 = sample(spec, 500, 42);
    const auto d2 = sample(spec, 500, 42);
    const auto d3 = sample(spec, 500, 43);
    CHECK(d1.x_data() == d2.x_data());
    CHECK(d1.y_data() == d2.y_data());
    CHECK(d1.x_data() != d3.x_data());
}

TEST_CASE("sample statistics follow the structural equations") {
    const auto spec = ScmSpec::preset("linear-reg");
    const auto d = sample(spec, 100000, 5);
    CHECK(d.frequency_a1() == doctest::Approx(0.5).epsilon(0.02));
    double rss = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double pred = structural_y_mean(spec, d.u(i), d.a(i));
        rss += (d.y(i) - pred) * (d.y(i) - pred);
    }
    CHECK(rss / d.size() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("stored counterfactuals are the SCM counterfactuals and involute") {
    for (const auto& name : ScmSpec::preset_names()) {
        const auto spec = ScmSpec::preset(name);
        const auto d = sample(spec, 200, 11);
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto u_cf = infer_u(spec, d.x_cf(i), 1 - d.a(i));
            for (std::size_t j = 0; j < spec.x_dim(); ++j) CHECK(u_cf[j] == doctest::Approx(d.u(i)[j]));
            const auto back = true_counterfactual(spec, d.x_cf(i), 1 - d.a(i), d.a(i));
            for (std::size_t j = 0; j < spec.x_dim(); ++j) CHECK(back[j] == doctest::Approx(d.x(i)[j]));
            const auto same = true_counterfactual(spec, d.x(i), d.a(i), d.a(i));
            for (std::size_t j = 0; j < spec.x_dim(); ++j) CHECK(same[j] == d.x(i)[j]);
        }
    }
}

TEST_CASE("structural_y_mean quadrature agrees with Monte Carlo") {
    // independent oracle: direct simulation of the Bernoulli mean over eps_Y
    const auto spec = ScmSpec::preset("linear-cls");
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n;
    for (double u0 : {-1.0, 0.0, 0.7}) {
        const std::vector<double> u{u0};
        for (int a : {0, 1}) {
            const double link = structural_link(spec, u, a);
            const std::size_t m = 4000000;
            std::vector<double> v(m);
            for (auto& x : v) x = sigmoid(link + spec.w_y * n(rng));
            CHECK(std::abs(structural_y_mean(spec, u, a) - pairwise_mean(v)) <= 1e-3);
        }
    }
}

TEST_CASE("dataset CSV round-trips") {
    const auto spec = ScmSpec::preset("linear-reg-3d");
    const auto d = sample(spec, 50, 3);
    std::stringstream ss;
    write_dataset_csv(ss, d);
    const auto back = read_dataset_csv(ss, spec.task);
    REQUIRE(back.size() == d.size());
    CHECK(back.dim() == 3);
    CHECK(back.x_data() == d.x_data());
    CHECK(back.y_data() == d.y_data());
    CHECK(back.all_hidden());
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(back.u(i)[2] == d.u(i)[2]);
}

TEST_CASE("discretized U is mirrored with normalized weights") {
    const auto d = discretize(ScmSpec::preset("linear-reg"), 51, 4.0);
    REQUIRE(d.u_grid.size() == 51);
    double total = 0.0;
    for (std::size_t i = 0; i < 51; ++i) {
        CHECK(d.u_grid[i] == -d.u_grid[50 - i]);
        total += d.weights[i];
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(d.u_grid[25] == 0.0);
    CHECK_THROWS_AS(discretize(ScmSpec::preset("linear-reg-3d"), 51, 4.0), std::invalid_argument);
}
