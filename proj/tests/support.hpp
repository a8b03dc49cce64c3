#pragma once

// Shared helpers for the unit tests and the acceptance binary: random inputs,
// a central-difference gradient checker and brute-force metric oracles that
// share no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "omicscl/matrix.hpp"
#include "omicscl/rng.hpp"
#include "omicscl/tape.hpp"

namespace testsupport {

using omicscl::Matrix;
using omicscl::Rng;

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    Matrix m(r, c);
    for (auto& v : m.values()) v = scale * rng.normal();
    return m;
}

// ------------------------------------------------------ gradient checking

using Builder = std::function<omicscl::ad::Var(omicscl::ad::Tape&, std::span<const omicscl::ad::Var>)>;

struct GradCheck {
    bool ok = true;
    double worst_excess = 0.0;  // max of |a - n| - (atol + rtol |n|)
    std::string where;
    std::size_t checked = 0;
};

inline double evaluate(const Builder& build, const std::vector<Matrix>& inputs) {
    omicscl::ad::Tape t;
    std::vector<omicscl::ad::Var> vars;
    for (const auto& m : inputs) vars.push_back(t.leaf(m));
    return t.value(build(t, vars)).item();
}

// Compares tape gradients of a scalar builder with central differences at
// every input entry.
inline GradCheck check_gradients(const Builder& build, std::vector<Matrix> inputs, double rtol = 1e-4,
                                 double atol = 1e-6, double h = 1e-6) {
    omicscl::ad::Tape t;
    std::vector<omicscl::ad::Var> vars;
    for (const auto& m : inputs) vars.push_back(t.leaf(m));
    const auto grads = omicscl::ad::grad(t, build(t, vars));

    GradCheck res;
    res.worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double x0 = inputs[k][i];
            const double step = h * std::max(1.0, std::abs(x0));
            inputs[k][i] = x0 + step;
            const double fp = evaluate(build, inputs);
            inputs[k][i] = x0 - step;
            const double fm = evaluate(build, inputs);
            inputs[k][i] = x0;
            const double numeric = (fp - fm) / (2.0 * step);
            const double analytic = grads[k][i];
            const double excess = std::abs(analytic - numeric) - (atol + rtol * std::abs(numeric));
            ++res.checked;
            if (excess > res.worst_excess) {
                res.worst_excess = excess;
                res.where = "input " + std::to_string(k) + " entry " + std::to_string(i) + ": analytic " +
                            std::to_string(analytic) + " numeric " + std::to_string(numeric);
            }
            if (excess > 0.0 || !std::isfinite(analytic)) res.ok = false;
        }
    }
    return res;
}

// ------------------------------------------------------- brute-force oracles

inline double brute_c_index(std::span<const double> risk, std::span<const double> t, std::span<const int> e) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = 0; j < t.size(); ++j) {
            if (!(t[i] < t[j]) || e[i] != 1) continue;
            den += 1.0;
            if (risk[i] > risk[j])
                num += 1.0;
            else if (risk[i] == risk[j])
                num += 0.5;
        }
    return num / den;
}

// S(x) by the product-limit formula evaluated directly at x.
inline double brute_km(std::span<const double> t, std::span<const int> e, double x) {
    std::set<double> event_times;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (e[i] == 1 && t[i] <= x) event_times.insert(t[i]);
    double s = 1.0;
    for (double tk : event_times) {
        double d = 0.0, n = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] >= tk) n += 1.0;
            if (t[i] == tk && e[i] == 1) d += 1.0;
        }
        s *= 1.0 - d / n;
    }
    return s;
}

inline double brute_logrank_statistic(std::span<const double> t, std::span<const int> e, std::span<const int> g) {
    std::map<int, double> observed, expected;
    for (int gi : g) observed[gi] = expected[gi] = 0.0;
    std::set<double> event_times;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (e[i] == 1) event_times.insert(t[i]);
    for (double tk : event_times) {
        double d = 0.0, n = 0.0;
        std::map<int, double> ng;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] >= tk) {
                n += 1.0;
                ng[g[i]] += 1.0;
            }
            if (t[i] == tk && e[i] == 1) {
                d += 1.0;
                observed[g[i]] += 1.0;
            }
        }
        for (auto& [gi, ex] : expected) ex += ng[gi] * d / n;
    }
    double stat = 0.0;
    for (const auto& [gi, ex] : expected)
        if (ex > 0.0) stat += (observed[gi] - ex) * (observed[gi] - ex) / ex;
    return stat;
}

// Pairs-based Rand index adjusted for chance (Hubert & Arabie), via direct
// enumeration of all patient pairs.
inline double brute_ari(std::span<const int> a, std::span<const int> b) {
    const std::size_t n = a.size();
    double both = 0.0, same_a = 0.0, same_b = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            same_a += sa;
            same_b += sb;
        }
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    const double expected = same_a * same_b / pairs;
    const double max_index = 0.5 * (same_a + same_b);
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

inline double brute_purity(std::span<const int> pred, std::span<const int> truth) {
    double total = 0.0;
    for (int c : std::set<int>(pred.begin(), pred.end())) {
        std::map<int, int> counts;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] == c) ++counts[truth[i]];
        int best = 0;
        for (const auto& [_, n] : counts) best = std::max(best, n);
        total += best;
    }
    return total / static_cast<double>(pred.size());
}

// NMI with arithmetic-mean normalization; 0/0 taken as 0.
inline double brute_nmi(std::span<const int> a, std::span<const int> b) {
    const double n = static_cast<double>(a.size());
    auto entropy = [&](std::span<const int> x) {
        std::map<int, double> c;
        for (int v : x) c[v] += 1.0;
        double h = 0.0;
        for (const auto& [_, k] : c) h -= (k / n) * std::log(k / n);
        return h;
    };
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ca, cb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ca[a[i]] += 1.0;
        cb[b[i]] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [key, k] : joint) mi += (k / n) * std::log(n * k / (ca[key.first] * cb[key.second]));
    const double denom = 0.5 * (entropy(a) + entropy(b));
    return denom == 0.0 ? 0.0 : std::max(0.0, mi) / denom;
}

inline double brute_silhouette(const Matrix& x, std::span<const int> labels) {
    const std::size_t n = x.rows();
    auto dist = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
        return std::sqrt(s);
    };
    const std::set<int> clusters(labels.begin(), labels.end());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::map<int, double> sum;
        std::map<int, double> count;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sum[labels[j]] += dist(i, j);
            count[labels[j]] += 1.0;
        }
        if (count[labels[i]] == 0.0) continue;  // singleton scores 0
        const double a = sum[labels[i]] / count[labels[i]];
        double b = std::numeric_limits<double>::infinity();
        for (int c : clusters)
            if (c != labels[i]) b = std::min(b, sum[c] / count[c]);
        const double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

}  // namespace testsupport
