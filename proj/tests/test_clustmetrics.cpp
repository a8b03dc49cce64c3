#include <doctest.h>

#include "omicscl/clustmetrics.hpp"
#include "support.hpp"

using namespace omicscl;
using V = std::vector<int>;

namespace {

// Labelings realizing a contingency table (rows = predicted clusters).
std::pair<V, V> from_table(const std::vector<std::vector<int>>& table) {
    V pred, truth;
    for (std::size_t r = 0; r < table.size(); ++r)
        for (std::size_t c = 0; c < table[r].size(); ++c)
            for (int k = 0; k < table[r][c]; ++k) {
                pred.push_back(static_cast<int>(r));
                truth.push_back(static_cast<int>(c));
            }
    return {pred, truth};
}

}  // namespace

TEST_CASE("label encoding maps unknowns to -1") {
    const std::vector<std::string> raw{"LumB", "Basal", "Unknown", "", "LumB", "unknown"};
    std::vector<std::string> classes;
    CHECK(clust::encode_labels(raw, &classes) == V{1, 0, -1, -1, 1, -1});
    CHECK(classes == std::vector<std::string>{"Basal", "LumB"});
}

TEST_CASE("purity hand cases") {
    const auto [p, t] = from_table({{5, 1}, {2, 4}});
    CHECK(clust::purity(p, t) == 0.75);
    CHECK(clust::purity(t, t) == 1.0);
    CHECK(clust::purity(V(10, 0), V{0, 0, 0, 0, 1, 1, 1, 2, 2, 2}) == doctest::Approx(0.4));
    CHECK_THROWS(clust::purity(V{0, 1}, V{-1, -1}));
}

TEST_CASE("unknown truth labels are excluded") {
    const V pred{0, 0, 1, 1, 1};
    const V truth{0, 0, 1, 1, -1};
    CHECK(clust::purity(pred, truth) == 1.0);
    CHECK(clust::ari(pred, truth) == 1.0);
    CHECK(clust::nmi(pred, truth) == doctest::Approx(1.0));
}

TEST_CASE("ari hand cases") {
    const V t{0, 0, 1, 1, 2, 2};
    CHECK(clust::ari(t, t) == 1.0);
    CHECK(clust::ari(V(6, 0), t) == 0.0);
    CHECK(clust::ari(V{2, 2, 0, 0, 1, 1}, t) == 1.0);
    CHECK_THROWS(clust::ari(V{0}, V{0}));
}

TEST_CASE("nmi hand cases") {
    const auto [p, t] = from_table({{10, 0}, {0, 10}});
    CHECK(clust::nmi(p, t) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(clust::nmi(V(5, 0), V(5, 0)) == 0.0);
    Rng rng(9);
    V a(1000), b(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        a[i] = static_cast<int>(rng.below(3));
        b[i] = static_cast<int>(rng.below(4));
    }
    CHECK(clust::nmi(a, b) < 0.05);
}

TEST_CASE("metrics match brute-force oracles and are permutation invariant") {
    Rng rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 2 + rng.below(29);
        const int kp = 1 + static_cast<int>(rng.below(5)), kt = 1 + static_cast<int>(rng.below(4));
        V p(n), t(n), relabeled(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = static_cast<int>(rng.below(static_cast<std::size_t>(kp)));
            t[i] = static_cast<int>(rng.below(static_cast<std::size_t>(kt)));
            relabeled[i] = (p[i] + 3) % 7;
        }
        CHECK(clust::ari(p, t) == doctest::Approx(testsupport::brute_ari(p, t)).epsilon(1e-12));
        CHECK(clust::purity(p, t) == testsupport::brute_purity(p, t));
        CHECK(clust::nmi(p, t) == doctest::Approx(testsupport::brute_nmi(p, t)).epsilon(1e-12));
        CHECK(clust::ari(relabeled, t) == doctest::Approx(clust::ari(p, t)).epsilon(1e-14));
        CHECK(clust::purity(relabeled, t) == clust::purity(p, t));
        CHECK(clust::nmi(relabeled, t) == doctest::Approx(clust::nmi(p, t)).epsilon(1e-14));
        CHECK(clust::ari(p, t) <= 1.0 + 1e-15);
    }
}

TEST_CASE("silhouette geometry") {
    Rng rng(2);
    Matrix x(40, 2);
    V labels(40);
    for (std::size_t i = 0; i < 40; ++i) {
        labels[i] = i < 20 ? 0 : 1;
        x(i, 0) = (i < 20 ? -10.0 : 10.0) + 0.1 * rng.normal();
        x(i, 1) = 0.1 * rng.normal();
    }
    CHECK(clust::silhouette(x, labels) > 0.9);
    CHECK_THROWS(clust::silhouette(x, V(40, 0)));

    const Matrix blob = testsupport::random_matrix(rng, 500, 3);
    V random(500);
    for (auto& l : random) l = static_cast<int>(rng.below(3));
    CHECK(std::abs(clust::silhouette(blob, random)) < 0.05);
    CHECK(clust::silhouette(blob, random) == doctest::Approx(testsupport::brute_silhouette(blob, random)).epsilon(1e-10));
}

TEST_CASE("raw accuracy ignores permutations, matched accuracy recovers them") {
    const V t{0, 0, 1, 1, 2, 2};
    const V p{1, 1, 2, 2, 0, 0};
    CHECK(clust::label_accuracy(t, t) == 1.0);
    CHECK(clust::label_accuracy(p, t) == 0.0);
    CHECK(clust::matched_accuracy(p, t) == 1.0);
    // More clusters than classes: the extra cluster matches nothing.
    CHECK(clust::matched_accuracy(V{0, 0, 1, 1, 3, 2}, t) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("hungarian assignment minimizes cost") {
    const std::vector<std::vector<double>> cost{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
    const auto a = clust::hungarian(cost);
    double total = 0;
    for (std::size_t r = 0; r < a.size(); ++r) total += cost[r][static_cast<std::size_t>(a[r])];
    CHECK(total == 5.0);
}
