#include <doctest.h>

#include <cmath>
#include <cstring>
#include <memory>

#include "pcf/fair_methods.hpp"
#include "pcf/metrics.hpp"

using namespace pcf;

namespace {

Predictor constant_predictor(double c, FeatureMap fm, std::size_t dim) {
    FeatureMatrix f;
    std::vector<double> y;
    for (int i = 0; i < 8; ++i) {
        f.append_row(std::vector<double>(dim, 0.1 * i));
        y.push_back(c);
    }
    TrainConfig cfg;
    return fit_knn(f, y, fm, Task::Regression, cfg);
}

}  // namespace

TEST_CASE("PCF and ECOCF on the hand-computed linear example") {
    const auto spec = ScmSpec::preset("linear-reg");
    const auto phi = analytic_bayes(spec);
    const Cgm g = oracle_cgm(spec);
    const std::vector<double> x{2.0};
    CHECK(pcf_predict(phi, g, 0.5, x, 1) == doctest::Approx(2.5));
    CHECK(ecocf_predict(phi, g, 0.5, x, 1) == doctest::Approx(2.5));
}

TEST_CASE("constant predictors pass through every method") {
    const auto spec = ScmSpec::preset("linear-reg");
    const Cgm g = noisy_cgm(oracle_cgm(spec), 0.2, 0.3, 1);
    const auto c = constant_predictor(0.7, FeatureMap::XA, 2);
    const std::vector<double> x{1.234};
    for (double p : {0.2, 0.5, 0.9}) {
        CHECK(pcf_predict(c, g, p, x, 0) == doctest::Approx(0.7));
        CHECK(ecocf_predict(c, g, p, x, 1) == doctest::Approx(0.7));
    }
    const std::vector<double> u{0.3};
    CHECK(cfu_predict(constant_predictor(0.7, FeatureMap::UOnly, 1), u) == doctest::Approx(0.7));
    CHECK(cfr_predict(constant_predictor(0.7, FeatureMap::SymXU, 2), x, x, u) == doctest::Approx(0.7));
}

TEST_CASE("ECOCF with p(a) = 1 reduces to phi(x, a)") {
    const auto spec = ScmSpec::preset("linear-reg");
    const auto phi = analytic_bayes(spec);
    const std::vector<double> x{0.8};
    CHECK(ecocf_predict(phi, oracle_cgm(spec), 1.0, x, 1) == doctest::Approx(phi.predict(x, 1)));
}

TEST_CASE("mixing with ERM") {
    CHECK(mix_with_erm(2.5, 3.0, 1.0) == 2.5);
    CHECK(mix_with_erm(2.5, 3.0, 0.0) == 3.0);
    CHECK(mix_with_erm(2.5, 3.0, 0.5) == doctest::Approx(2.75));
    CHECK_THROWS_AS(mix_with_erm(1, 2, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(mix_with_erm(1, 2, -0.1), std::invalid_argument);
}

TEST_CASE("CFR's symmetric feature is affine in u with oracle inputs") {
    const auto spec = ScmSpec::preset("linear-reg");
    const auto d = sample(spec, 100, 2);
    const Cgm g = oracle_cgm(spec);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto xcf = g(d.x(i), d.a(i), 1 - d.a(i));
        CHECK(0.5 * (d.x(i)[0] + xcf[0]) == doctest::Approx(d.u(i)[0] + 0.5));
    }
}

TEST_CASE("FairMethod validates its parts") {
    const auto spec = ScmSpec::preset("linear-reg");
    auto phi = std::make_shared<const Predictor>(analytic_bayes(spec));
    using P = FairMethod::Parts;
    CHECK_THROWS_AS(FairMethod(P{MethodKind::Pcf, phi, std::nullopt, std::nullopt, 0.5, 1.0, nullptr}),
                    std::invalid_argument);
    CHECK_THROWS_AS(FairMethod(P{MethodKind::Erm, phi, std::nullopt, std::nullopt, 0.5, 0.5, nullptr}),
                    std::invalid_argument);
    CHECK_THROWS_AS(FairMethod(P{MethodKind::Erm, phi, std::nullopt, std::nullopt, 0.5, 1.2, phi}),
                    std::invalid_argument);
    CHECK_THROWS_AS(FairMethod(P{MethodKind::Cfu, phi, std::nullopt, UEstimator::oracle(), 0.5, 1.0, nullptr}),
                    std::invalid_argument);
    CHECK_THROWS_AS(FairMethod(P{MethodKind::Erm, phi, std::nullopt, std::nullopt, 1.0, 1.0, nullptr}),
                    std::invalid_argument);
}

TEST_CASE("oracle-input fair methods are constant on counterfactual pairs") {
    for (const auto& name : {"linear-reg", "cubic-reg", "linear-cls", "cubic-cls", "linear-reg-3d"}) {
        const auto spec = ScmSpec::preset(name);
        const auto train = sample(spec, 2000, 3);
        const auto test = sample(spec, 1000, 4);
        const Cgm g = oracle_cgm(spec);
        const auto ue = UEstimator::oracle();
        TrainConfig cfg;
        auto knn = std::make_shared<const Predictor>(fit_knn(train, FeatureMap::XA, cfg));
        auto knn_u = std::make_shared<const Predictor>(fit_knn(train, FeatureMap::UOnly, cfg, nullptr, &ue));
        auto knn_s = std::make_shared<const Predictor>(fit_knn(train, FeatureMap::SymXU, cfg, &g, &ue));
        const double p = train.frequency_a1();
        using P = FairMethod::Parts;
        const std::vector<FairMethod> methods{
            FairMethod(P{MethodKind::Pcf, knn, g, std::nullopt, p, 1.0, nullptr}),
            FairMethod(P{MethodKind::Ecocf, knn, g, std::nullopt, p, 1.0, nullptr}),
            FairMethod(P{MethodKind::Cfu, knn_u, std::nullopt, ue, p, 1.0, nullptr}),
            FairMethod(P{MethodKind::Cfr, knn_s, g, ue, p, 1.0, nullptr}),
        };
        for (const auto& m : methods) {
            const auto r = evaluate(m, test);
            CHECK(r.te <= 1e-9);
            CHECK(r.max_gap <= 1e-9);
        }
    }
}

TEST_CASE("batch and scalar method paths agree bit for bit") {
    const auto spec = ScmSpec::preset("linear-reg-3d");
    const auto train = sample(spec, 2000, 5);
    const auto test = sample(spec, 500, 6);
    const Cgm g = noisy_cgm(oracle_cgm(spec), 0.0, 0.1, 7);
    const auto ue = UEstimator::noisy(0.0, 0.1, 8);
    TrainConfig cfg;
    auto knn = std::make_shared<const Predictor>(fit_knn(train, FeatureMap::XA, cfg));
    auto knn_s = std::make_shared<const Predictor>(fit_knn(train, FeatureMap::SymXU, cfg, &g, &ue));
    using P = FairMethod::Parts;
    const std::vector<FairMethod> methods{
        FairMethod(P{MethodKind::Pcf, knn, g, std::nullopt, 0.4, 0.6, knn}),
        FairMethod(P{MethodKind::Ecocf, knn, g, std::nullopt, 0.4, 1.0, nullptr}),
        FairMethod(P{MethodKind::Cfr, knn_s, g, ue, 0.4, 0.3, knn}),
    };
    const auto q = factual_queries(test);
    for (const auto& m : methods) {
        const auto a = m.predict_batch(q);
        const auto b = m.predict_batch_serial(q);
        REQUIRE(a.size() == b.size());
        CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
        for (std::size_t i = 0; i < 20; ++i) CHECK(m.predict(q.x_row(i), q.a[i], q.u_row(i)) == a[i]);
    }
}

TEST_CASE("lambda sweep scales TE linearly on analytic linear-reg") {
    const auto spec = ScmSpec::preset("linear-reg");
    const auto test = sample(spec, 5000, 9);
    auto phi = std::make_shared<const Predictor>(analytic_bayes(spec));
    const FairMethod pcf({MethodKind::PcfAna, phi, oracle_cgm(spec), std::nullopt, 0.5, 1.0, nullptr});
    const double te_erm =
        evaluate(FairMethod({MethodKind::Erm, phi, std::nullopt, std::nullopt, 0.5, 1.0, nullptr}), test).te;
    CHECK(te_erm == doctest::Approx(1.0));
    for (double l : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        CHECK(evaluate(pcf.with_lambda(l, phi), test).te == doctest::Approx((1 - l) * te_erm).epsilon(1e-9));
    }
}

TEST_CASE("CFU with KNN on u loses to PCF-Ana at n = 1e5") {
    const auto spec = ScmSpec::preset("linear-reg");
    const auto train = sample(spec, 100000, 10);
    const auto test = sample(spec, 20000, 11);
    const auto ue = UEstimator::oracle();
    auto knn_u = std::make_shared<const Predictor>(fit_knn(train, FeatureMap::UOnly, TrainConfig{}, nullptr, &ue));
    auto phi = std::make_shared<const Predictor>(analytic_bayes(spec));
    const double cfu =
        evaluate(FairMethod({MethodKind::Cfu, knn_u, std::nullopt, ue, 0.5, 1.0, nullptr}), test).error;
    const double ana =
        evaluate(FairMethod({MethodKind::PcfAna, phi, oracle_cgm(spec), std::nullopt, 0.5, 1.0, nullptr}), test)
            .error;
    CHECK(cfu > ana);
}
