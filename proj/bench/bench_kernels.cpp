// Serial reference vs OpenMP variant of each kernel. Run with
// OMP_NUM_THREADS=<n> to compare thread counts.
#include <benchmark/benchmark.h>

#include "omicscl/kernels.hpp"
#include "omicscl/rng.hpp"

using namespace omicscl;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (auto& v : m.values()) v = rng.normal();
    return m;
}

std::vector<int> random_labels(std::size_t n, int k, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> l(n);
    for (auto& v : l) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    return l;
}

template <bool Parallel>
void BM_gemm(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const Matrix a = random_matrix(n, 200, 1), b = random_matrix(200, 128, 2);
    for (auto _ : st) benchmark::DoNotOptimize(Parallel ? kernels::parallel::gemm(a, b) : kernels::serial::gemm(a, b));
}

template <bool Parallel>
void BM_pairwise_sqdist(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const Matrix x = random_matrix(n, 192, 3);
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? kernels::parallel::pairwise_sqdist(x, x)
                                          : kernels::serial::pairwise_sqdist(x, x));
}

template <bool Parallel>
void BM_nearest_centroid(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const Matrix x = random_matrix(n, 192, 4), c = random_matrix(9, 192, 5);
    std::vector<int> labels(n);
    std::vector<double> d(n);
    for (auto _ : st) {
        if (Parallel)
            kernels::parallel::nearest_centroid(x, c, labels, d);
        else
            kernels::serial::nearest_centroid(x, c, labels, d);
        benchmark::DoNotOptimize(labels.data());
    }
}

template <bool Parallel>
void BM_concordance(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    Rng rng(6);
    std::vector<double> risk(n), time(n);
    std::vector<int> event(n);
    for (std::size_t i = 0; i < n; ++i) {
        risk[i] = rng.normal();
        time[i] = rng.exponential(1.0);
        event[i] = rng.uniform() < 0.7;
    }
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? kernels::parallel::concordance(risk, time, event)
                                          : kernels::serial::concordance(risk, time, event));
}

template <bool Parallel>
void BM_silhouette(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const Matrix x = random_matrix(n, 192, 7);
    const auto labels = random_labels(n, 4, 8);
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? kernels::parallel::silhouette_samples(x, labels, 4)
                                          : kernels::serial::silhouette_samples(x, labels, 4));
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/serial")->Arg(128)->Arg(600);
BENCHMARK(BM_gemm<true>)->Name("gemm/openmp")->Arg(128)->Arg(600);
BENCHMARK(BM_pairwise_sqdist<false>)->Name("pairwise_sqdist/serial")->Arg(120)->Arg(600);
BENCHMARK(BM_pairwise_sqdist<true>)->Name("pairwise_sqdist/openmp")->Arg(120)->Arg(600);
BENCHMARK(BM_nearest_centroid<false>)->Name("nearest_centroid/serial")->Arg(360)->Arg(5000);
BENCHMARK(BM_nearest_centroid<true>)->Name("nearest_centroid/openmp")->Arg(360)->Arg(5000);
BENCHMARK(BM_concordance<false>)->Name("concordance/serial")->Arg(120)->Arg(2000);
BENCHMARK(BM_concordance<true>)->Name("concordance/openmp")->Arg(120)->Arg(2000);
BENCHMARK(BM_silhouette<false>)->Name("silhouette/serial")->Arg(120)->Arg(600);
BENCHMARK(BM_silhouette<true>)->Name("silhouette/openmp")->Arg(120)->Arg(600);

BENCHMARK_MAIN();
