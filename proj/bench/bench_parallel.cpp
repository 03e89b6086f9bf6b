// Serial reference vs OpenMP kernels. Pass --benchmark_filter to narrow.
#include <benchmark/benchmark.h>

#include "picurve/classifier.hpp"
#include "picurve/data_io.hpp"
#include "picurve/inference.hpp"

using namespace picurve;

namespace {

std::vector<double> grid(double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = hi * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

const Dataset& sample() {
    static const Dataset d =
        make_synthetic("bench", ParameterVector(ModelId::Ph10, {10.0, 80.0, 900.0}), grid(2000, 30), 0.2, 11);
    return d;
}

const std::vector<Dataset>& batch() {
    static const auto sets = example_data();
    return sets;
}

void BM_EvaluateGrid_Serial(benchmark::State& st) {
    const ParameterVector p(ModelId::Ph11, {10.0, 80.0, 900.0, 2.0});
    const auto g = grid(3000, static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(serial::evaluate_grid(ModelId::Ph11, p, g));
}
void BM_EvaluateGrid_OpenMP(benchmark::State& st) {
    const ParameterVector p(ModelId::Ph11, {10.0, 80.0, 900.0, 2.0});
    const auto g = grid(3000, static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(evaluate_grid(ModelId::Ph11, p, g));
}
BENCHMARK(BM_EvaluateGrid_Serial)->Arg(1 << 12)->Arg(1 << 18);
BENCHMARK(BM_EvaluateGrid_OpenMP)->Arg(1 << 12)->Arg(1 << 18);

void BM_FitAll_Serial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(serial::fit_all(sample()));
}
void BM_FitAll_OpenMP(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(fit_all(sample()));
}
BENCHMARK(BM_FitAll_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitAll_OpenMP)->Unit(benchmark::kMillisecond);

void BM_ClassifyBatch_Serial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(serial::classify_batch(batch()));
}
void BM_ClassifyBatch_OpenMP(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(classify_batch(batch()));
}
BENCHMARK(BM_ClassifyBatch_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifyBatch_OpenMP)->Unit(benchmark::kMillisecond);

struct BandInputs {
    FitResult fit;
    Covariance cov;
    std::vector<double> g;
};
const BandInputs& band_inputs() {
    static const BandInputs b = [] {
        BandInputs x;
        x.fit = fit_model(sample(), ModelId::Ph10);
        x.cov = covariance(info_matrix(x.fit, sample()));
        x.g = grid(2000, 20001);
        return x;
    }();
    return b;
}
void BM_PredictionBand_Serial(benchmark::State& st) {
    const auto& b = band_inputs();
    for (auto _ : st) benchmark::DoNotOptimize(serial::prediction_band(b.fit, b.cov, b.g));
}
void BM_PredictionBand_OpenMP(benchmark::State& st) {
    const auto& b = band_inputs();
    for (auto _ : st) benchmark::DoNotOptimize(prediction_band(b.fit, b.cov, b.g));
}
BENCHMARK(BM_PredictionBand_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictionBand_OpenMP)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
