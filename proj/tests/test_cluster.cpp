#include <doctest.h>

#include "omicscl/cluster.hpp"
#include "omicscl/clustmetrics.hpp"
#include "omicscl/survmetrics.hpp"
#include "support.hpp"

using namespace omicscl;

namespace {

// Well-separated Gaussian clouds around the given centers.
std::pair<Matrix, std::vector<int>> clouds(Rng& rng, const std::vector<std::vector<double>>& centers,
                                           std::size_t per, double spread) {
    const std::size_t d = centers[0].size();
    Matrix x(centers.size() * per, d);
    std::vector<int> truth;
    for (std::size_t k = 0; k < centers.size(); ++k)
        for (std::size_t i = 0; i < per; ++i) {
            for (std::size_t c = 0; c < d; ++c) x(k * per + i, c) = centers[k][c] + spread * rng.normal();
            truth.push_back(static_cast<int>(k));
        }
    return {x, truth};
}

}  // namespace

TEST_CASE("fusion shapes") {
    Rng rng(1);
    const std::vector<Matrix> z{testsupport::random_matrix(rng, 4, 64), testsupport::random_matrix(rng, 4, 64),
                                testsupport::random_matrix(rng, 4, 64)};
    CHECK(cluster::fuse(z, cluster::Fusion::Concat).cols() == 192);
    const Matrix u = row_l2_normalize(z[0]);
    const std::vector<Matrix> same{u, u, u};
    CHECK(max_abs_diff(cluster::fuse(same, cluster::Fusion::Mean), u) < 1e-15);
    const std::vector<Matrix> antipodal{Matrix{{1, 0}}, Matrix{{-1, 0}}};
    CHECK(cluster::fuse(antipodal, cluster::Fusion::Mean) == Matrix{{0, 0}});
    CHECK(cluster::parse_fusion("mean") == cluster::Fusion::Mean);
    CHECK_THROWS(cluster::parse_fusion("sum"));
}

TEST_CASE("kmeans recovers planted clouds") {
    Rng data(2);
    const auto [x, truth] = clouds(data, {{0, 0}, {8, 0}, {0, 8}}, 30, 0.5);
    Rng rng(3);
    const auto m = cluster::kmeans_fit(x, 3, rng);
    CHECK(clust::ari(m.labels, truth) == 1.0);
    for (std::size_t i = 1; i < m.inertia_trace.size(); ++i) CHECK(m.inertia_trace[i] <= m.inertia_trace[i - 1] + 1e-12);
    CHECK(cluster::assign(m, x) == m.labels);
}

TEST_CASE("kmeans degenerate k") {
    Rng data(4);
    const Matrix x = testsupport::random_matrix(data, 12, 3);
    Rng rng(5);
    const auto one = cluster::kmeans_fit(x, 1, rng);
    const auto means = column_means(x);
    double tss = 0;
    for (std::size_t r = 0; r < 12; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(one.centroids(0, c) == doctest::Approx(means[c]).epsilon(1e-12));
            tss += (x(r, c) - means[c]) * (x(r, c) - means[c]);
        }
    CHECK(one.inertia == doctest::Approx(tss).epsilon(1e-12));
    CHECK(cluster::kmeans_fit(x, 12, rng).inertia == doctest::Approx(0.0));
    CHECK_THROWS(cluster::kmeans_fit(x, 13, rng));
    CHECK_THROWS(cluster::kmeans_fit(x, 0, rng));
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
    Rng data(6);
    const Matrix x = testsupport::random_matrix(data, 50, 4);
    Rng a(7), b(7);
    const auto ma = cluster::kmeans_fit(x, 4, a), mb = cluster::kmeans_fit(x, 4, b);
    CHECK(ma.labels == mb.labels);
    CHECK(ma.centroids == mb.centroids);
}

TEST_CASE("assign: ties, dimension checks and margin stability") {
    cluster::KMeansModel m;
    m.k = 3;
    m.centroids = Matrix{{-1, 0}, {0, 7}, {1, 0}};
    CHECK(cluster::assign(m, Matrix{{0, 0}}) == std::vector<int>{0});
    CHECK_THROWS_AS(cluster::assign(m, Matrix{{0, 0, 0}}), DimensionError);
    Rng rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        const Matrix p{{-1 + 0.45 * rng.uniform(-1, 1), 0.45 * rng.uniform(-1, 1)}};
        CHECK(cluster::assign(m, p) == std::vector<int>{0});
    }
}

TEST_CASE("cluster risk ordering") {
    const losses::BatchSurvival s{{1, 1.5, 2, 10, 11, 12}, {1, 1, 1, 1, 1, 1}};
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    const auto r = cluster::cluster_risk(labels, 2, s);
    CHECK(r.map.risk[0] > r.map.risk[1]);
    CHECK(r.map.derivation == cluster::RiskStatistic::KMMedian);
    CHECK(r.patient_risk[0] == r.map.risk[0]);

    const auto all = cluster::cluster_risk(std::vector<int>(6, 0), 1, s);
    CHECK(surv::c_index(all.patient_risk, s.t, s.e) == 0.5);
}

TEST_CASE("cluster risk falls back to restricted mean and handles empty clusters") {
    // Cluster 1 stops at S = 2/3.
    const losses::BatchSurvival s{{1, 2, 3, 4, 5, 6, 7}, {1, 1, 1, 0, 1, 0, 0}};
    const auto r = cluster::cluster_risk(std::vector<int>{0, 0, 0, 1, 1, 1, 1}, 3, s);
    CHECK(r.map.derivation == cluster::RiskStatistic::RestrictedMean);
    CHECK(r.map.horizon == 7.0);
    CHECK(r.map.risk[0] > r.map.risk[1]);
    CHECK(r.map.sizes[2] == 0);
    const auto overall = surv::km_fit(s.t, s.e).restricted_mean(7.0);
    CHECK(r.map.risk[2] == doctest::Approx(-overall));
}

TEST_CASE("planted hazard ordering is recovered") {
    Rng rng(9);
    losses::BatchSurvival s;
    std::vector<int> labels;
    const double rates[3] = {1.0, 2.0, 4.0};
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 100; ++i) {
            s.t.push_back(rng.exponential(rates[k]));
            s.e.push_back(1);
            labels.push_back(k);
        }
    const auto r = cluster::cluster_risk(labels, 3, s);
    CHECK(r.map.risk[0] < r.map.risk[1]);
    CHECK(r.map.risk[1] < r.map.risk[2]);
}
