// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <cmath>

#include "pcf/knn.hpp"
#include "pcf/metrics.hpp"
#include "pcf/predictor.hpp"
#include "pcf/scm.hpp"
#include "pcf/theory.hpp"

namespace {

struct KnnFixture {
    pcf::FeatureMatrix train;
    pcf::FeatureMatrix queries;
    std::vector<double> labels;
    pcf::knn::SortedIndex index;

    explicit KnnFixture(std::size_t n_train) {
        const auto tr = pcf::sample(pcf::ScmSpec::preset("linear-reg"), n_train, 1);
        const auto te = pcf::sample(pcf::ScmSpec::preset("linear-reg"), 2000, 2);
        train = pcf::training_features(tr, pcf::FeatureMap::XA);
        queries = pcf::training_features(te, pcf::FeatureMap::XA);
        labels = tr.y_data();
        index = pcf::knn::SortedIndex(train);
    }
};

void BM_KnnSerial(benchmark::State& state) {
    KnnFixture f(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pcf::knn::serial::predict_batch(f.train, f.labels, f.queries, 5));
    }
}

void BM_KnnIndexSerial(benchmark::State& state) {
    KnnFixture f(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pcf::knn::serial::predict_batch(f.train, f.index, f.labels, f.queries, 5));
    }
}

void BM_KnnParallel(benchmark::State& state) {
    KnnFixture f(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pcf::knn::parallel::predict_batch(f.train, f.index, f.labels, f.queries, 5));
    }
}

BENCHMARK(BM_KnnSerial)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnIndexSerial)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnParallel)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

struct MetricFixture {
    std::vector<double> f, c, y;
    std::vector<int> a;
    explicit MetricFixture(std::size_t n) : f(n), c(n), y(n), a(n) {
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = std::sin(0.1 * i);
            c[i] = std::cos(0.1 * i);
            y[i] = 0.5 * std::sin(0.3 * i);
            a[i] = static_cast<int>(i % 2);
        }
    }
};

void BM_MetricsSerial(benchmark::State& state) {
    MetricFixture m(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pcf::serial::mean_loss(m.f, m.y, pcf::Loss::Mse));
        benchmark::DoNotOptimize(pcf::serial::total_effect(m.f, m.c, m.a));
    }
}

void BM_MetricsParallel(benchmark::State& state) {
    MetricFixture m(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pcf::parallel::mean_loss(m.f, m.y, pcf::Loss::Mse));
        benchmark::DoNotOptimize(pcf::parallel::total_effect(m.f, m.c, m.a));
    }
}

BENCHMARK(BM_MetricsSerial)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MetricsParallel)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_MutualInfoSerial(benchmark::State& state) {
    const auto spec = pcf::ScmSpec::preset("linear-cls");
    for (auto _ : state) {
        benchmark::DoNotOptimize(pcf::serial::mc_mean(
            [&](std::span<const double> u) { return pcf::structural_y_mean(spec, u, 1); }, 1, 20000, 3));
    }
}

void BM_MutualInfoParallel(benchmark::State& state) {
    const auto spec = pcf::ScmSpec::preset("linear-cls");
    for (auto _ : state) {
        benchmark::DoNotOptimize(pcf::parallel::mc_mean(
            [&](std::span<const double> u) { return pcf::structural_y_mean(spec, u, 1); }, 1, 20000, 3));
    }
}

BENCHMARK(BM_MutualInfoSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MutualInfoParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
