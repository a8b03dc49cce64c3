#include "omicscl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace omicscl::kernels {

namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void check_nearest_args(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                        std::span<double> sqdist) {
    if (x.cols() != centroids.cols()) throw DimensionError("nearest_centroid: dimension mismatch");
    if (labels.size() != x.rows() || sqdist.size() != x.rows())
        throw DimensionError("nearest_centroid: output size mismatch");
    if (centroids.rows() == 0) throw DimensionError("nearest_centroid: no centroids");
}

void check_concordance_args(std::span<const double> risk, std::span<const double> time,
                            std::span<const int> event) {
    if (risk.size() != time.size() || risk.size() != event.size())
        throw DimensionError("concordance: length mismatch");
}

inline double row_sqdist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        const double diff = a[c] - b[c];
        s += diff * diff;
    }
    return s;
}

// Silhouette value for one sample given per-cluster distance sums.
double silhouette_from_sums(std::span<const double> sums, std::span<const std::size_t> counts, int own) {
    const std::size_t own_n = counts[static_cast<std::size_t>(own)];
    if (own_n <= 1) return 0.0;
    const double a = sums[static_cast<std::size_t>(own)] / static_cast<double>(own_n - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (static_cast<int>(k) == own || counts[k] == 0) continue;
        b = std::min(b, sums[k] / static_cast<double>(counts[k]));
    }
    if (!std::isfinite(b)) return 0.0;
    const double denom = std::max(a, b);
    return denom > 0.0 ? (b - a) / denom : 0.0;
}

std::vector<std::size_t> cluster_counts(std::span<const int> labels, int n_clusters) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_clusters), 0);
    for (int l : labels) {
        if (l < 0 || l >= n_clusters) throw DimensionError("silhouette: label out of range");
        ++counts[static_cast<std::size_t>(l)];
    }
    return counts;
}

}  // namespace

// ---------------------------------------------------------------- serial

namespace serial {

Matrix gemm(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("gemm: inner dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    }
    return c;
}

Matrix pairwise_sqdist(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) throw DimensionError("pairwise_sqdist: dimension mismatch");
    Matrix out(x.rows(), y.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j)
            out(i, j) = row_sqdist(x.row(i).data(), y.row(j).data(), x.cols());
    return out;
}

void nearest_centroid(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                      std::span<double> sqdist) {
    check_nearest_args(x, centroids, labels, sqdist);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < centroids.rows(); ++k) {
            const double d = row_sqdist(x.row(i).data(), centroids.row(k).data(), x.cols());
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        labels[i] = best;
        sqdist[i] = best_d;
    }
}

ConcordanceCounts concordance(std::span<const double> risk, std::span<const double> time,
                              std::span<const int> event) {
    check_concordance_args(risk, time, event);
    ConcordanceCounts out;
    const std::size_t n = risk.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (event[i] != 1) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(time[i] < time[j])) continue;
            ++out.comparable;
            if (risk[i] > risk[j]) out.concordant_halves += 2;
            else if (risk[i] == risk[j]) out.concordant_halves += 1;
        }
    }
    return out;
}

std::vector<double> silhouette_samples(const Matrix& x, std::span<const int> labels, int n_clusters) {
    if (labels.size() != x.rows()) throw DimensionError("silhouette: label count mismatch");
    const auto counts = cluster_counts(labels, n_clusters);
    std::vector<double> s(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::vector<double> sums(static_cast<std::size_t>(n_clusters), 0.0);
        for (std::size_t j = 0; j < x.rows(); ++j) {
            if (i == j) continue;
            sums[static_cast<std::size_t>(labels[j])] +=
                std::sqrt(row_sqdist(x.row(i).data(), x.row(j).data(), x.cols()));
        }
        s[i] = silhouette_from_sums(sums, counts, labels[i]);
    }
    return s;
}

}  // namespace serial

// ---------------------------------------------------------------- OpenMP

namespace parallel {

Matrix gemm(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("gemm: inner dimension mismatch");
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
    const std::size_t n = b.cols();
    const std::size_t kk = a.cols();
    Matrix c(a.rows(), n);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        double* crow = pc + static_cast<std::size_t>(i) * n;
        const double* arow = pa + static_cast<std::size_t>(i) * kk;
        for (std::size_t k = 0; k < kk; ++k) {
            const double aik = arow[k];
            const double* brow = pb + k * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix pairwise_sqdist(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) throw DimensionError("pairwise_sqdist: dimension mismatch");
    Matrix out(x.rows(), y.rows());
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        for (std::size_t j = 0; j < y.rows(); ++j)
            out(ui, j) = row_sqdist(x.row(ui).data(), y.row(j).data(), x.cols());
    }
    return out;
}

void nearest_centroid(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                      std::span<double> sqdist) {
    check_nearest_args(x, centroids, labels, sqdist);
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < centroids.rows(); ++k) {
            const double d = row_sqdist(x.row(ui).data(), centroids.row(k).data(), x.cols());
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        labels[ui] = best;
        sqdist[ui] = best_d;
    }
}

ConcordanceCounts concordance(std::span<const double> risk, std::span<const double> time,
                              std::span<const int> event) {
    check_concordance_args(risk, time, event);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(risk.size());
    std::uint64_t halves = 0;
    std::uint64_t comparable = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : halves, comparable)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (event[ui] != 1) continue;
        const double ti = time[ui];
        const double ri = risk[ui];
        for (std::size_t j = 0; j < risk.size(); ++j) {
            if (!(ti < time[j])) continue;
            ++comparable;
            halves += ri > risk[j] ? 2 : (ri == risk[j] ? 1 : 0);
        }
    }
    return {halves, comparable};
}

std::vector<double> silhouette_samples(const Matrix& x, std::span<const int> labels, int n_clusters) {
    if (labels.size() != x.rows()) throw DimensionError("silhouette: label count mismatch");
    const auto counts = cluster_counts(labels, n_clusters);
    std::vector<double> s(x.rows(), 0.0);
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel
    {
        std::vector<double> sums(static_cast<std::size_t>(n_clusters));
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < m; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            std::fill(sums.begin(), sums.end(), 0.0);
            for (std::size_t j = 0; j < x.rows(); ++j) {
                if (ui == j) continue;
                sums[static_cast<std::size_t>(labels[j])] +=
                    std::sqrt(row_sqdist(x.row(ui).data(), x.row(j).data(), x.cols()));
            }
            s[ui] = silhouette_from_sums(sums, counts, labels[ui]);
        }
    }
    return s;
}

}  // namespace parallel

// ---------------------------------------------------------------- dispatch

Matrix gemm(const Matrix& a, const Matrix& b) {
    return a.rows() * a.cols() * b.cols() >= kParallelWork ? parallel::gemm(a, b) : serial::gemm(a, b);
}

Matrix pairwise_sqdist(const Matrix& x, const Matrix& y) {
    return x.rows() * y.rows() * x.cols() >= kParallelWork ? parallel::pairwise_sqdist(x, y)
                                                           : serial::pairwise_sqdist(x, y);
}

void nearest_centroid(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                      std::span<double> sqdist) {
    if (x.rows() * centroids.rows() * x.cols() >= kParallelWork)
        parallel::nearest_centroid(x, centroids, labels, sqdist);
    else
        serial::nearest_centroid(x, centroids, labels, sqdist);
}

ConcordanceCounts concordance(std::span<const double> risk, std::span<const double> time,
                              std::span<const int> event) {
    return risk.size() * risk.size() >= kParallelWork ? parallel::concordance(risk, time, event)
                                                      : serial::concordance(risk, time, event);
}

std::vector<double> silhouette_samples(const Matrix& x, std::span<const int> labels, int n_clusters) {
    return x.rows() * x.rows() * x.cols() >= kParallelWork
               ? parallel::silhouette_samples(x, labels, n_clusters)
               : serial::silhouette_samples(x, labels, n_clusters);
}

bool openmp_enabled() noexcept {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace omicscl::kernels
