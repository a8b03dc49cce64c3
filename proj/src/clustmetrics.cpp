#include "omicscl/clustmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "omicscl/kernels.hpp"

namespace omicscl::clust {

namespace {

bool is_unknown(const std::string& s) {
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return lower.empty() || lower == "unknown";
}

std::vector<int> compact(std::span<const int> labels) {
    std::map<int, int> code;
    for (int l : labels) code.emplace(l, 0);
    int next = 0;
    for (auto& [l, c] : code) c = next++;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) out.push_back(code.at(l));
    return out;
}

struct Known {
    std::vector<int> pred;
    std::vector<int> truth;
};

Known known_only(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) throw DimensionError("label lengths differ");
    Known k;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] < 0) continue;
        k.pred.push_back(pred[i]);
        k.truth.push_back(truth[i]);
    }
    return k;
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

std::vector<int> encode_labels(std::span<const std::string> labels, std::vector<std::string>* classes) {
    std::set<std::string> names;
    for (const auto& l : labels)
        if (!is_unknown(l)) names.insert(l);
    std::vector<std::string> sorted(names.begin(), names.end());
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        if (is_unknown(l)) {
            out.push_back(kUnknown);
        } else {
            out.push_back(static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), l) - sorted.begin()));
        }
    }
    if (classes) *classes = std::move(sorted);
    return out;
}

std::vector<std::vector<long long>> contingency(std::span<const int> pred, std::span<const int> truth) {
    const Known k = known_only(pred, truth);
    const auto p = compact(k.pred);
    const auto t = compact(k.truth);
    const int rows = p.empty() ? 0 : *std::max_element(p.begin(), p.end()) + 1;
    const int cols = t.empty() ? 0 : *std::max_element(t.begin(), t.end()) + 1;
    std::vector<std::vector<long long>> table(static_cast<std::size_t>(rows),
                                              std::vector<long long>(static_cast<std::size_t>(cols), 0));
    for (std::size_t i = 0; i < p.size(); ++i) ++table[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(t[i])];
    return table;
}

double silhouette(const Matrix& x, std::span<const int> labels) {
    if (labels.size() != x.rows()) throw DimensionError("silhouette: label count mismatch");
    const auto codes = compact(labels);
    const int k = codes.empty() ? 0 : *std::max_element(codes.begin(), codes.end()) + 1;
    if (k < 2) throw std::invalid_argument("silhouette: need at least 2 clusters");
    const auto s = kernels::silhouette_samples(x, codes, k);
    double total = 0.0;
    for (double v : s) total += v;
    return total / static_cast<double>(s.size());
}

double purity(std::span<const int> pred, std::span<const int> truth) {
    const auto table = contingency(pred, truth);
    long long n = 0, hits = 0;
    for (const auto& row : table) {
        for (long long c : row) n += c;
        if (!row.empty()) hits += *std::max_element(row.begin(), row.end());
    }
    if (n == 0) throw std::invalid_argument("purity: no samples with known truth labels");
    return static_cast<double>(hits) / static_cast<double>(n);
}

double ari(std::span<const int> pred, std::span<const int> truth) {
    const auto table = contingency(pred, truth);
    double n = 0.0, sum_cells = 0.0;
    std::vector<double> rows(table.size(), 0.0);
    std::vector<double> cols(table.empty() ? 0 : table[0].size(), 0.0);
    for (std::size_t i = 0; i < table.size(); ++i)
        for (std::size_t j = 0; j < table[i].size(); ++j) {
            const double c = static_cast<double>(table[i][j]);
            n += c;
            rows[i] += c;
            cols[j] += c;
            sum_cells += comb2(c);
        }
    if (n < 2.0) throw std::invalid_argument("ari: need at least 2 samples");
    double sum_rows = 0.0, sum_cols = 0.0;
    for (double r : rows) sum_rows += comb2(r);
    for (double c : cols) sum_cols += comb2(c);
    const double expected = sum_rows * sum_cols / comb2(n);
    const double max_index = 0.5 * (sum_rows + sum_cols);
    // Both partitions trivial (all one cluster, or all singletons): identical by construction.
    if (max_index == expected) return 1.0;
    return (sum_cells - expected) / (max_index - expected);
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
    const auto table = contingency(pred, truth);
    double n = 0.0;
    std::vector<double> rows(table.size(), 0.0);
    std::vector<double> cols(table.empty() ? 0 : table[0].size(), 0.0);
    for (std::size_t i = 0; i < table.size(); ++i)
        for (std::size_t j = 0; j < table[i].size(); ++j) {
            const double c = static_cast<double>(table[i][j]);
            n += c;
            rows[i] += c;
            cols[j] += c;
        }
    if (n == 0.0) return 0.0;
    double mi = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i)
        for (std::size_t j = 0; j < table[i].size(); ++j) {
            const double c = static_cast<double>(table[i][j]);
            if (c > 0.0) mi += c / n * std::log(c * n / (rows[i] * cols[j]));
        }
    auto entropy = [n](const std::vector<double>& m) {
        double h = 0.0;
        for (double c : m)
            if (c > 0.0) h -= c / n * std::log(c / n);
        return h;
    };
    const double denom = 0.5 * (entropy(rows) + entropy(cols));
    if (denom <= 0.0) return 0.0;
    return std::clamp(mi / denom, 0.0, 1.0);
}

double label_accuracy(std::span<const int> pred, std::span<const int> truth) {
    const Known k = known_only(pred, truth);
    if (k.pred.empty()) throw std::invalid_argument("label_accuracy: no samples with known truth labels");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k.pred.size(); ++i) hits += k.pred[i] == k.truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(k.pred.size());
}

double matched_accuracy(std::span<const int> pred, std::span<const int> truth) {
    const auto table = contingency(pred, truth);
    if (table.empty()) throw std::invalid_argument("matched_accuracy: no samples with known truth labels");
    const std::size_t r = table.size(), c = table[0].size();
    const std::size_t m = std::max(r, c);
    long long n = 0;
    std::vector<std::vector<double>> cost(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            cost[i][j] = -static_cast<double>(table[i][j]);
            n += table[i][j];
        }
    const auto match = hungarian(cost);
    double hits = 0.0;
    for (std::size_t i = 0; i < r; ++i) hits += -cost[i][static_cast<std::size_t>(match[i])];
    return hits / static_cast<double>(n);
}

std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    // Shortest augmenting path formulation with row/column potentials, O(n^2 m).
    const std::size_t n = cost.size();
    if (n == 0) return {};
    const std::size_t m = cost[0].size();
    if (n > m) throw std::invalid_argument("hungarian: more rows than columns");
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n, -1);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) assignment[p[j] - 1] = static_cast<int>(j - 1);
    return assignment;
}

}  // namespace omicscl::clust
