#pragma once

// Data-parallel inner loops used across the pipeline. Every kernel has a
// straightforward serial reference and an OpenMP variant. The OpenMP variants
// parallelize only over independent output rows/samples and keep the
// per-entry accumulation order of the reference, so both produce bitwise
// identical results for any thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "omicscl/matrix.hpp"

namespace omicscl::kernels {

// Pair counts behind Harrell's C. Concordant mass is kept in half-units so the
// reduction is exact integer arithmetic.
struct ConcordanceCounts {
    std::uint64_t concordant_halves = 0;
    std::uint64_t comparable = 0;
};

namespace serial {
Matrix gemm(const Matrix& a, const Matrix& b);
Matrix pairwise_sqdist(const Matrix& x, const Matrix& y);
void nearest_centroid(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                      std::span<double> sqdist);
ConcordanceCounts concordance(std::span<const double> risk, std::span<const double> time,
                              std::span<const int> event);
std::vector<double> silhouette_samples(const Matrix& x, std::span<const int> labels, int n_clusters);
}  // namespace serial

namespace parallel {
Matrix gemm(const Matrix& a, const Matrix& b);
Matrix pairwise_sqdist(const Matrix& x, const Matrix& y);
void nearest_centroid(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                      std::span<double> sqdist);
ConcordanceCounts concordance(std::span<const double> risk, std::span<const double> time,
                              std::span<const int> event);
std::vector<double> silhouette_samples(const Matrix& x, std::span<const int> labels, int n_clusters);
}  // namespace parallel

// Dispatchers: the parallel path above a work threshold, serial below it.
Matrix gemm(const Matrix& a, const Matrix& b);
Matrix pairwise_sqdist(const Matrix& x, const Matrix& y);
void nearest_centroid(const Matrix& x, const Matrix& centroids, std::span<int> labels,
                      std::span<double> sqdist);
ConcordanceCounts concordance(std::span<const double> risk, std::span<const double> time,
                              std::span<const int> event);
std::vector<double> silhouette_samples(const Matrix& x, std::span<const int> labels, int n_clusters);

bool openmp_enabled() noexcept;
int max_threads() noexcept;

}  // namespace omicscl::kernels
