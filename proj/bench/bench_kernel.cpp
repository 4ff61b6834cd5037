// Serial reference vs OpenMP batch kernels on one CSR mini-batch.
#include <benchmark/benchmark.h>

#include <random>

#include "csr/batch_kernel.hpp"
#include "csr/model.hpp"
#include "csr/objective.hpp"

using namespace csr;

namespace {

struct Batch {
    Mlp model;
    Matrix x, y, u, v;
};

Batch make_batch(std::size_t rows, std::size_t width) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Batch b{Mlp::random({20, width, width, 10}, 7), Matrix(rows, 20), Matrix(rows, 10), Matrix(rows, 10),
            Matrix(rows, 10)};
    for (double& e : b.x.data) e = n(rng);
    for (std::size_t r = 0; r < rows; ++r) b.y(r, rng() % 10) = 1.0;
    for (double& e : b.u.data) e = 1e-3 * n(rng);
    for (double& e : b.v.data) e = 1e-3 * n(rng);
    return b;
}

void run(benchmark::State& state, bool parallel) {
    const auto b = make_batch(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    const Matrix mbar = Matrix::identity(10);
    BatchGradientKernel kernel(parallel);
    GradientSet g(b.model);
    for (auto _ : state) {
        g.clear();
        const auto obj = csr_batch_objective(b.model, b.x, b.y, &b.u, &b.v, &mbar, {}, kernel, g);
        benchmark::DoNotOptimize(obj.ce_sum);
        benchmark::DoNotOptimize(g.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Serial(benchmark::State& state) { run(state, false); }
void BM_Parallel(benchmark::State& state) { run(state, true); }

void BM_PredictSerialLoop(benchmark::State& state) {
    const auto b = make_batch(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        double s = 0.0;
        for (std::size_t r = 0; r < b.x.rows; ++r) s += forward(b.model, b.x.row(r))[0];
        benchmark::DoNotOptimize(s);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PredictParallel(benchmark::State& state) {
    const auto b = make_batch(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(predict(b.model, b.x).data.data());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

const std::vector<std::vector<int64_t>> kShapes{{64, 256, 4096}, {32, 64}};

}  // namespace

BENCHMARK(BM_Serial)->ArgsProduct(kShapes);
BENCHMARK(BM_Parallel)->ArgsProduct(kShapes);
BENCHMARK(BM_PredictSerialLoop)->ArgsProduct(kShapes);
BENCHMARK(BM_PredictParallel)->ArgsProduct(kShapes);

BENCHMARK_MAIN();
