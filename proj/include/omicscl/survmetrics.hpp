#pragma once

#include <optional>
#include <span>
#include <vector>

namespace omicscl::surv {

// Harrell's C over pairs with t_i < t_j and e_i = 1; risk ties count 1/2.
// Throws if no pair is comparable.
double c_index(std::span<const double> risk, std::span<const double> time, std::span<const int> event);

// Product-limit estimate. Steps are stored at distinct event times only.
struct KMCurve {
    std::vector<double> time;
    std::vector<double> survival;  // S just after time[i]
    std::vector<std::size_t> at_risk;
    std::vector<std::size_t> events;

    // Right-continuous step function S(t).
    double at(double t) const;
    // Smallest event time with S <= 0.5, if the curve gets there.
    std::optional<double> median() const;
    // Area under S on [0, horizon].
    double restricted_mean(double horizon) const;
};

KMCurve km_fit(std::span<const double> time, std::span<const int> event);

struct LogRankResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};

// k-sample log-rank test with the sum((O - E)^2 / E) statistic.
LogRankResult logrank_k(std::span<const double> time, std::span<const int> event, std::span<const int> groups);

}  // namespace omicscl::surv
