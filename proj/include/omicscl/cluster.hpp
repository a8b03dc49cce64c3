#pragma once

#include <span>
#include <string>
#include <vector>

#include "omicscl/losses.hpp"
#include "omicscl/matrix.hpp"
#include "omicscl/rng.hpp"

namespace omicscl::cluster {

enum class Fusion { Concat, Mean };

Fusion parse_fusion(const std::string& s);
std::string to_string(Fusion f);

// Patient representation from per-modality embeddings. Mean fusion is
// re-normalized onto the unit sphere.
Matrix fuse(std::span<const Matrix> embeds, Fusion strategy);

struct KMeansOptions {
    int n_init = 10;
    int max_iter = 300;
    double tol = 1e-6;  // max centroid shift
};

struct KMeansModel {
    int k = 0;
    Matrix centroids;             // k x d
    double inertia = 0.0;
    std::vector<int> labels;
    int n_iter = 0;
    std::vector<double> inertia_trace;  // after each assignment step of the winning restart
};

// k-means++ seeding and Lloyd iterations; best of n_init restarts by inertia.
KMeansModel kmeans_fit(const Matrix& x, int k, Rng& rng, const KMeansOptions& opts = {});

// Nearest centroid per row; ties go to the lowest index.
std::vector<int> assign(const KMeansModel& model, const Matrix& x);

enum class RiskStatistic { KMMedian, RestrictedMean };

struct ClusterRiskMap {
    std::vector<double> risk;  // per cluster, higher = worse prognosis
    RiskStatistic derivation = RiskStatistic::KMMedian;
    double horizon = 0.0;      // restricted-mean horizon when used
    std::vector<std::size_t> sizes;

    std::vector<double> patient_risk(std::span<const int> labels) const;
};

struct ClusterRisk {
    ClusterRiskMap map;
    std::vector<double> patient_risk;
};

// Risk per cluster = -(Kaplan-Meier median survival of its members). When any
// non-empty cluster never reaches S <= 0.5, every cluster switches to the
// restricted mean survival time up to the largest observed time. Empty
// clusters take the whole-cohort statistic.
ClusterRisk cluster_risk(std::span<const int> labels, int k, const losses::BatchSurvival& surv);

std::string to_string(RiskStatistic s);

}  // namespace omicscl::cluster
