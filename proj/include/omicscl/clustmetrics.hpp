#pragma once

#include <span>
#include <string>
#include <vector>

#include "omicscl/matrix.hpp"

namespace omicscl::clust {

// Truth labels are integer class codes; negative codes mark "Unknown" and are
// dropped (together with the matching predictions) before any label metric.
inline constexpr int kUnknown = -1;

// Maps label strings to codes by sorted order of the distinct known names.
// "Unknown" (any case) and empty strings map to kUnknown.
std::vector<int> encode_labels(std::span<const std::string> labels, std::vector<std::string>* classes = nullptr);

// Mean silhouette (Euclidean); samples in singleton clusters score 0.
double silhouette(const Matrix& x, std::span<const int> labels);

double purity(std::span<const int> pred, std::span<const int> truth);
double ari(std::span<const int> pred, std::span<const int> truth);
// Mutual information over the arithmetic mean of the two entropies; 0/0 -> 0.
double nmi(std::span<const int> pred, std::span<const int> truth);

// Fraction of samples whose raw cluster index equals the truth code. No
// cluster-to-class matching, so a perfect partition can score 0.
double label_accuracy(std::span<const int> pred, std::span<const int> truth);
// Accuracy after the best one-to-one cluster-to-class matching.
double matched_accuracy(std::span<const int> pred, std::span<const int> truth);

// Contingency counts: rows = predicted clusters, cols = truth classes, over
// samples with known truth. Labels are compacted in sorted order.
std::vector<std::vector<long long>> contingency(std::span<const int> pred, std::span<const int> truth);

// Minimum-cost assignment of rows to columns (rows <= cols). Returns the
// column assigned to each row.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost);

}  // namespace omicscl::clust
