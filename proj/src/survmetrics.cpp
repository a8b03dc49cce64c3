#include "omicscl/survmetrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "omicscl/kernels.hpp"
#include "omicscl/special.hpp"

namespace omicscl::surv {

namespace {

void check_aligned(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DimensionError(std::string(what) + ": input lengths differ");
}

// Indices sorted by time ascending.
std::vector<std::size_t> time_order(std::span<const double> time) {
    std::vector<std::size_t> idx(time.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });
    return idx;
}

}  // namespace

double c_index(std::span<const double> risk, std::span<const double> time, std::span<const int> event) {
    check_aligned(risk.size(), time.size(), "c_index");
    check_aligned(risk.size(), event.size(), "c_index");
    const auto counts = kernels::concordance(risk, time, event);
    if (counts.comparable == 0) throw std::domain_error("c_index: no comparable pairs");
    return 0.5 * static_cast<double>(counts.concordant_halves) / static_cast<double>(counts.comparable);
}

double KMCurve::at(double t) const {
    double s = 1.0;
    for (std::size_t i = 0; i < time.size() && time[i] <= t; ++i) s = survival[i];
    return s;
}

std::optional<double> KMCurve::median() const {
    for (std::size_t i = 0; i < time.size(); ++i)
        if (survival[i] <= 0.5) return time[i];
    return std::nullopt;
}

double KMCurve::restricted_mean(double horizon) const {
    double area = 0.0, prev_t = 0.0, s = 1.0;
    for (std::size_t i = 0; i < time.size() && time[i] < horizon; ++i) {
        area += s * (time[i] - prev_t);
        prev_t = time[i];
        s = survival[i];
    }
    if (horizon > prev_t) area += s * (horizon - prev_t);
    return area;
}

KMCurve km_fit(std::span<const double> time, std::span<const int> event) {
    check_aligned(time.size(), event.size(), "km_fit");
    for (double t : time)
        if (!(t >= 0.0)) throw std::invalid_argument("km_fit: times must be >= 0");
    const auto idx = time_order(time);
    KMCurve km;
    std::size_t at_risk = time.size();
    double s = 1.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double t = time[idx[i]];
        std::size_t deaths = 0, leaving = 0;
        while (i < idx.size() && time[idx[i]] == t) {
            deaths += event[idx[i]] == 1 ? 1 : 0;
            ++leaving;
            ++i;
        }
        if (deaths > 0) {
            s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
            km.time.push_back(t);
            km.survival.push_back(s);
            km.at_risk.push_back(at_risk);
            km.events.push_back(deaths);
        }
        at_risk -= leaving;
    }
    return km;
}

LogRankResult logrank_k(std::span<const double> time, std::span<const int> event, std::span<const int> groups) {
    check_aligned(time.size(), event.size(), "logrank_k");
    check_aligned(time.size(), groups.size(), "logrank_k");
    std::map<int, std::size_t> gindex;
    for (int g : groups) gindex.emplace(g, 0);
    if (gindex.size() < 2) throw std::invalid_argument("logrank_k: need at least 2 non-empty groups");
    std::size_t next = 0;
    for (auto& [g, k] : gindex) k = next++;
    const std::size_t k = gindex.size();

    std::vector<std::size_t> group_of(time.size());
    std::vector<double> at_risk(k, 0.0);
    for (std::size_t i = 0; i < time.size(); ++i) {
        group_of[i] = gindex.at(groups[i]);
        at_risk[group_of[i]] += 1.0;
    }

    std::vector<double> observed(k, 0.0), expected(k, 0.0);
    const auto idx = time_order(time);
    std::size_t i = 0;
    while (i < idx.size()) {
        const double t = time[idx[i]];
        std::vector<double> d_g(k, 0.0), leave_g(k, 0.0);
        double d = 0.0;
        while (i < idx.size() && time[idx[i]] == t) {
            const std::size_t g = group_of[idx[i]];
            if (event[idx[i]] == 1) {
                d_g[g] += 1.0;
                d += 1.0;
            }
            leave_g[g] += 1.0;
            ++i;
        }
        if (d > 0.0) {
            const double n = std::accumulate(at_risk.begin(), at_risk.end(), 0.0);
            for (std::size_t g = 0; g < k; ++g) {
                observed[g] += d_g[g];
                expected[g] += at_risk[g] * d / n;
            }
        }
        for (std::size_t g = 0; g < k; ++g) at_risk[g] -= leave_g[g];
    }

    LogRankResult r;
    for (std::size_t g = 0; g < k; ++g)
        if (expected[g] > 0.0) r.statistic += (observed[g] - expected[g]) * (observed[g] - expected[g]) / expected[g];
    r.df = static_cast<int>(k) - 1;
    r.p_value = chi2_sf(r.statistic, r.df);
    return r;
}

}  // namespace omicscl::surv
