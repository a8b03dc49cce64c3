#include <doctest.h>

#include <omp.h>

#include "omicscl/kernels.hpp"
#include "support.hpp"

using namespace omicscl;
namespace ser = kernels::serial;
namespace par = kernels::parallel;

namespace {

struct Threads {
    int saved = omp_get_max_threads();
    explicit Threads(int n) { omp_set_num_threads(n); }
    ~Threads() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("OpenMP kernels are bitwise equal to the serial reference") {
    Rng rng(11);
    for (int threads : {1, 3, 4}) {
        Threads guard(threads);
        for (auto [n, d] : {std::pair<std::size_t, std::size_t>{1, 1}, {7, 5}, {64, 33}, {257, 12}}) {
            const Matrix a = testsupport::random_matrix(rng, n, d);
            const Matrix b = testsupport::random_matrix(rng, d, 9);
            const Matrix c = testsupport::random_matrix(rng, 5, d);
            CHECK(ser::gemm(a, b) == par::gemm(a, b));
            CHECK(ser::pairwise_sqdist(a, c) == par::pairwise_sqdist(a, c));

            std::vector<int> l1(n), l2(n);
            std::vector<double> d1(n), d2(n);
            ser::nearest_centroid(a, c, l1, d1);
            par::nearest_centroid(a, c, l2, d2);
            CHECK(l1 == l2);
            CHECK(d1 == d2);

            std::vector<double> risk(n), time(n);
            std::vector<int> event(n), labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                risk[i] = static_cast<double>(rng.below(4));  // plenty of risk ties
                time[i] = static_cast<double>(rng.below(10));  // and time ties
                event[i] = rng.uniform() < 0.6;
                labels[i] = static_cast<int>(i % 3);
            }
            const auto c1 = ser::concordance(risk, time, event), c2 = par::concordance(risk, time, event);
            CHECK(c1.concordant_halves == c2.concordant_halves);
            CHECK(c1.comparable == c2.comparable);
            CHECK(ser::silhouette_samples(a, labels, 3) == par::silhouette_samples(a, labels, 3));
        }
    }
}

TEST_CASE("gemm reference against a hand example") {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{5, 6}, {7, 8}};
    CHECK(ser::gemm(a, b) == Matrix{{19, 22}, {43, 50}});
    CHECK(par::gemm(a, b) == Matrix{{19, 22}, {43, 50}});
}

TEST_CASE("pairwise squared distances") {
    const Matrix x{{0, 0}, {3, 4}};
    const Matrix y{{0, 0}, {1, 1}};
    CHECK(kernels::pairwise_sqdist(x, y) == Matrix{{0, 2}, {25, 13}});
}

TEST_CASE("nearest centroid breaks ties toward the lowest index") {
    const Matrix x{{0, 0}};
    const Matrix c{{1, 0}, {0, 5}, {-1, 0}};
    std::vector<int> labels(1);
    std::vector<double> d(1);
    kernels::nearest_centroid(x, c, labels, d);
    CHECK(labels[0] == 0);
    CHECK(d[0] == 1.0);
}

TEST_CASE("concordance counts on a tiny instance") {
    // Pairs (i earlier with event): (0,1) concordant, (0,2) tie in risk, (1,2) discordant.
    const std::vector<double> risk{2, 1, 2}, time{1, 2, 3};
    const std::vector<int> event{1, 1, 0};
    const auto c = kernels::concordance(risk, time, event);
    CHECK(c.comparable == 3);
    CHECK(c.concordant_halves == 3);
}

TEST_CASE("silhouette samples agree with the brute-force oracle") {
    Rng rng(2);
    const Matrix x = testsupport::random_matrix(rng, 20, 3);
    std::vector<int> labels(20);
    for (std::size_t i = 0; i < 20; ++i) labels[i] = static_cast<int>(i % 4);
    labels[19] = 4;  // singleton
    const auto s = kernels::silhouette_samples(x, labels, 5);
    CHECK(s[19] == 0.0);
    double mean = 0.0;
    for (double v : s) mean += v;
    CHECK(mean / 20 == doctest::Approx(testsupport::brute_silhouette(x, labels)).epsilon(1e-12));
}
