#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pcf/mlp.hpp"
#include "pcf/predictor.hpp"
#include "pcf/scm.hpp"
#include "oracles.hpp"

using namespace pcf;

TEST_CASE("backprop matches central differences at 20 parameter points") {
    CHECK(oracles::worst_gradient_error(20, 1) <= 1e-5);
}

TEST_CASE("constant targets are learned") {
    FeatureMatrix xs;
    std::vector<double> ys;
    for (int i = 0; i < 10000; ++i) {
        xs.append_row(std::vector<double>{-2.0 + 4.0 * i / 9999.0, static_cast<double>(i % 2)});
        ys.push_back(1.5);
    }
    TrainConfig cfg;
    const auto p = fit_mlp(xs, ys, FeatureMap::XA, Task::Regression, cfg);
    for (double x = -2.0; x <= 2.0; x += 0.25) {
        for (int a : {0, 1}) CHECK(std::abs(p.predict(std::vector<double>{x}, a) - 1.5) <= 0.01);
    }
}

TEST_CASE("training is bit-reproducible and serializes") {
    const auto d = sample(ScmSpec::preset("linear-cls"), 600, 2);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 9;
    const auto a = fit_mlp(d, FeatureMap::XA, cfg);
    const auto b = fit_mlp(d, FeatureMap::XA, cfg);
    CHECK(a.as_mlp()->net.flat_params() == b.as_mlp()->net.flat_params());
    const auto back = Predictor::from_json(a.to_json());
    for (std::size_t i = 0; i < 50; ++i) {
        const double v = a.predict(d.x(i), d.a(i));
        CHECK(back.predict(d.x(i), d.a(i)) == v);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("divergence is reported as a training failure") {
    FeatureMatrix xs;
    std::vector<double> ys;
    for (int i = 0; i < 50; ++i) {
        xs.append_row(std::vector<double>{static_cast<double>(i)});
        ys.push_back(i % 2 ? 1e300 : -1e300);
    }
    mlp::Network net(1, {4}, false, 0);
    mlp::AdamOptions opt;
    opt.batch_size = 10;
    CHECK_THROWS_AS(mlp::train(net, xs, ys, opt), mlp::TrainingFailure);
}

TEST_CASE("MLP on linear-reg gets within 10% of the Bayes risk") {
    const auto spec = ScmSpec::preset("linear-reg");
    const auto train = sample(spec, 10000, 5);
    const auto test = sample(spec, 20000, 6);
    TrainConfig cfg;
    cfg.seed = 1;
    const auto p = fit_mlp(train, FeatureMap::XA, cfg);
    const auto bayes = analytic_bayes(spec);
    double mse = 0.0, bayes_mse = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double e = p.predict(test.x(i), test.a(i)) - test.y(i);
        const double eb = bayes.predict(test.x(i), test.a(i)) - test.y(i);
        mse += e * e;
        bayes_mse += eb * eb;
    }
    CHECK(mse <= 1.1 * bayes_mse);
}
