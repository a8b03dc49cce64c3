#include "omicscl/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "omicscl/kernels.hpp"
#include "omicscl/survmetrics.hpp"

namespace omicscl::cluster {

Fusion parse_fusion(const std::string& s) {
    if (s == "concat") return Fusion::Concat;
    if (s == "mean") return Fusion::Mean;
    throw std::invalid_argument("unknown fusion strategy '" + s + "' (expected concat|mean)");
}

std::string to_string(Fusion f) { return f == Fusion::Concat ? "concat" : "mean"; }

std::string to_string(RiskStatistic s) {
    return s == RiskStatistic::KMMedian ? "km_median" : "restricted_mean";
}

Matrix fuse(std::span<const Matrix> embeds, Fusion strategy) {
    if (embeds.empty()) throw DimensionError("fuse: no embeddings");
    for (const auto& e : embeds)
        if (e.rows() != embeds[0].rows()) throw DimensionError("fuse: row counts differ");
    if (strategy == Fusion::Concat) return hconcat(embeds);
    Matrix acc = embeds[0];
    for (std::size_t v = 1; v < embeds.size(); ++v) acc = acc + embeds[v];
    return row_l2_normalize((1.0 / static_cast<double>(embeds.size())) * acc);
}

namespace {

double total_sqdist(std::span<const double> d) {
    double s = 0.0;
    for (double v : d) s += v;
    return s;
}

Matrix kmeanspp_seed(const Matrix& x, int k, Rng& rng) {
    const std::size_t n = x.rows();
    Matrix centers(static_cast<std::size_t>(k), x.cols());
    std::size_t first = rng.below(n);
    std::copy(x.row(first).begin(), x.row(first).end(), centers.row(0).begin());
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double diff = x(i, c) - centers(0, c);
            s += diff * diff;
        }
        d2[i] = s;
    }
    for (int j = 1; j < k; ++j) {
        const double total = total_sqdist(d2);
        std::size_t pick = n - 1;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.below(n);
        }
        std::copy(x.row(pick).begin(), x.row(pick).end(), centers.row(static_cast<std::size_t>(j)).begin());
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                const double diff = x(i, c) - centers(static_cast<std::size_t>(j), c);
                s += diff * diff;
            }
            d2[i] = std::min(d2[i], s);
        }
    }
    return centers;
}

KMeansModel lloyd(const Matrix& x, int k, Rng& rng, const KMeansOptions& opts) {
    const std::size_t n = x.rows(), d = x.cols();
    KMeansModel m;
    m.k = k;
    m.centroids = kmeanspp_seed(x, k, rng);
    m.labels.assign(n, 0);
    std::vector<double> d2(n);
    for (int it = 0; it < opts.max_iter; ++it) {
        kernels::nearest_centroid(x, m.centroids, m.labels, d2);
        m.inertia_trace.push_back(total_sqdist(d2));
        m.n_iter = it + 1;

        Matrix next(static_cast<std::size_t>(k), d);
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto l = static_cast<std::size_t>(m.labels[i]);
            ++counts[l];
            for (std::size_t c = 0; c < d; ++c) next(l, c) += x(i, c);
        }
        // Empty clusters are re-seeded at the point farthest from its centroid.
        std::vector<bool> taken(n, false);
        for (std::size_t l = 0; l < static_cast<std::size_t>(k); ++l) {
            if (counts[l] > 0) {
                for (std::size_t c = 0; c < d; ++c) next(l, c) /= static_cast<double>(counts[l]);
                continue;
            }
            std::size_t far = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i] && d2[i] > best) {
                    best = d2[i];
                    far = i;
                }
            taken[far] = true;
            std::copy(x.row(far).begin(), x.row(far).end(), next.row(l).begin());
        }
        double shift = 0.0;
        for (std::size_t l = 0; l < static_cast<std::size_t>(k); ++l) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = next(l, c) - m.centroids(l, c);
                s += diff * diff;
            }
            shift = std::max(shift, std::sqrt(s));
        }
        m.centroids = std::move(next);
        if (shift < opts.tol) break;
    }
    kernels::nearest_centroid(x, m.centroids, m.labels, d2);
    m.inertia = total_sqdist(d2);
    m.inertia_trace.push_back(m.inertia);
    return m;
}

}  // namespace

KMeansModel kmeans_fit(const Matrix& x, int k, Rng& rng, const KMeansOptions& opts) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (static_cast<std::size_t>(k) > x.rows())
        throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(x.rows()) +
                                    " samples");
    if (opts.n_init < 1 || opts.max_iter < 1) throw std::invalid_argument("kmeans: n_init/max_iter must be >= 1");

    const Rng base = rng.derive("kmeans");
    std::vector<KMeansModel> runs(static_cast<std::size_t>(opts.n_init));
    const std::ptrdiff_t n_init = opts.n_init;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t r = 0; r < n_init; ++r) {
        Rng local = base.derive("restart-" + std::to_string(r));
        runs[static_cast<std::size_t>(r)] = lloyd(x, k, local, opts);
    }
    // Advance the caller's stream so consecutive fits differ.
    rng.next_u64();
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].inertia < runs[best].inertia) best = r;
    return std::move(runs[best]);
}

std::vector<int> assign(const KMeansModel& model, const Matrix& x) {
    if (x.cols() != model.centroids.cols())
        throw DimensionError("assign: data has " + std::to_string(x.cols()) + " columns, centroids " +
                             std::to_string(model.centroids.cols()));
    std::vector<int> labels(x.rows());
    std::vector<double> d2(x.rows());
    kernels::nearest_centroid(x, model.centroids, labels, d2);
    return labels;
}

std::vector<double> ClusterRiskMap::patient_risk(std::span<const int> labels) const {
    std::vector<double> out;
    out.reserve(labels.size());
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= risk.size())
            throw std::out_of_range("cluster label " + std::to_string(l) + " has no risk");
        out.push_back(risk[static_cast<std::size_t>(l)]);
    }
    return out;
}

ClusterRisk cluster_risk(std::span<const int> labels, int k, const losses::BatchSurvival& surv) {
    if (labels.size() != surv.size()) throw DimensionError("cluster_risk: labels/survival length mismatch");
    if (k < 1) throw std::invalid_argument("cluster_risk: k must be >= 1");
    const auto uk = static_cast<std::size_t>(k);
    std::vector<std::vector<double>> t(uk);
    std::vector<std::vector<int>> e(uk);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) throw std::out_of_range("cluster_risk: label out of range");
        t[static_cast<std::size_t>(labels[i])].push_back(surv.t[i]);
        e[static_cast<std::size_t>(labels[i])].push_back(surv.e[i]);
    }

    ClusterRisk out;
    out.map.sizes.resize(uk);
    std::vector<surv::KMCurve> curves(uk);
    bool all_medians = true;
    for (std::size_t c = 0; c < uk; ++c) {
        out.map.sizes[c] = t[c].size();
        if (t[c].empty()) continue;
        curves[c] = surv::km_fit(t[c], e[c]);
        all_medians = all_medians && curves[c].median().has_value();
    }
    const auto overall = surv::km_fit(surv.t, surv.e);
    all_medians = all_medians && overall.median().has_value();

    double horizon = 0.0;
    for (double ti : surv.t) horizon = std::max(horizon, ti);
    out.map.derivation = all_medians ? RiskStatistic::KMMedian : RiskStatistic::RestrictedMean;
    out.map.horizon = all_medians ? 0.0 : horizon;

    auto statistic = [&](const surv::KMCurve& km) {
        return all_medians ? *km.median() : km.restricted_mean(horizon);
    };
    const double overall_stat = statistic(overall);
    out.map.risk.resize(uk);
    for (std::size_t c = 0; c < uk; ++c)
        out.map.risk[c] = -(t[c].empty() ? overall_stat : statistic(curves[c]));
    out.patient_risk = out.map.patient_risk(labels);
    return out;
}

}  // namespace omicscl::cluster
