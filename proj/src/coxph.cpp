#include "omicscl/coxph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace omicscl::cox {

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double g : v) m = std::max(m, std::abs(g));
    return m;
}

void check_inputs(const Matrix& x, std::span<const double> time, std::span<const int> event) {
    if (x.rows() != time.size() || x.rows() != event.size())
        throw DimensionError("cox: covariate/survival row mismatch");
}

}  // namespace

PartialLikelihood partial_likelihood(const Matrix& x, std::span<const double> time, std::span<const int> event,
                                     std::span<const double> beta, double ridge, bool with_hessian) {
    check_inputs(x, time, event);
    const std::size_t n = x.rows(), p = x.cols();
    if (beta.size() != p) throw DimensionError("cox: beta length mismatch");

    std::vector<double> eta(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) eta[i] += x(i, j) * beta[j];
    // Shift for numerical range; cancels in the likelihood.
    const double shift = n ? *std::max_element(eta.begin(), eta.end()) : 0.0;

    // Process in decreasing time so risk-set sums accumulate; Breslow ties share
    // the full risk set {j : t_j >= t_i}.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });

    PartialLikelihood out;
    out.gradient.assign(p, 0.0);
    if (with_hessian) out.hessian = Matrix(p, p);
    double s0 = 0.0;
    std::vector<double> s1(p, 0.0);
    Matrix s2 = with_hessian ? Matrix(p, p) : Matrix();

    std::size_t k = 0;
    while (k < n) {
        const double t = time[order[k]];
        std::size_t end = k;
        while (end < n && time[order[end]] == t) {
            const std::size_t i = order[end];
            const double w = std::exp(eta[i] - shift);
            s0 += w;
            for (std::size_t a = 0; a < p; ++a) {
                s1[a] += w * x(i, a);
                if (with_hessian)
                    for (std::size_t b = 0; b < p; ++b) s2(a, b) += w * x(i, a) * x(i, b);
            }
            ++end;
        }
        for (std::size_t q = k; q < end; ++q) {
            const std::size_t i = order[q];
            if (event[i] != 1) continue;
            out.value += eta[i] - shift - std::log(s0);
            for (std::size_t a = 0; a < p; ++a) {
                const double mean_a = s1[a] / s0;
                out.gradient[a] += x(i, a) - mean_a;
                if (with_hessian)
                    for (std::size_t b = 0; b < p; ++b)
                        out.hessian(a, b) -= s2(a, b) / s0 - mean_a * s1[b] / s0;
            }
        }
        k = end;
    }
    for (std::size_t a = 0; a < p; ++a) {
        out.value -= 0.5 * ridge * beta[a] * beta[a];
        out.gradient[a] -= ridge * beta[a];
        if (with_hessian) out.hessian(a, a) -= ridge;
    }
    return out;
}

CoxModel cox_fit(const Matrix& x, std::span<const double> time, std::span<const int> event, const CoxOptions& opts) {
    check_inputs(x, time, event);
    if (std::none_of(event.begin(), event.end(), [](int e) { return e == 1; }))
        throw std::invalid_argument("cox_fit: no events");
    if (opts.ridge < 0.0) throw std::invalid_argument("cox_fit: ridge must be >= 0");
    const std::size_t p = x.cols();

    CoxModel model;
    model.beta.assign(p, 0.0);
    auto pl = partial_likelihood(x, time, event, model.beta, opts.ridge);
    model.log_likelihood = pl.value;
    model.loglik_trace.push_back(pl.value);

    for (int it = 0; it < opts.max_iter; ++it) {
        if (max_abs(pl.gradient) < opts.tol) {
            model.converged = true;
            break;
        }
        Eigen::MatrixXd h(p, p);
        Eigen::VectorXd g(p);
        for (std::size_t a = 0; a < p; ++a) {
            g(static_cast<Eigen::Index>(a)) = pl.gradient[a];
            for (std::size_t b = 0; b < p; ++b)
                h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = -pl.hessian(a, b);
        }
        // Newton direction solves (-H) step = g; -H is positive (semi)definite.
        Eigen::VectorXd step = h.ldlt().solve(g);
        if (!step.allFinite()) step = g;

        bool accepted = false;
        double scale = 1.0;
        for (int half = 0; half <= opts.max_halvings; ++half, scale *= 0.5) {
            std::vector<double> cand(p);
            for (std::size_t a = 0; a < p; ++a) cand[a] = model.beta[a] + scale * step(static_cast<Eigen::Index>(a));
            auto next = partial_likelihood(x, time, event, cand, opts.ridge);
            // Close to the optimum the gain of a Newton step drops below the
            // resolution of the log-likelihood; such ties are broken by the
            // gradient norm instead.
            const double resolution = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(pl.value);
            const bool tie = std::abs(next.value - pl.value) <= resolution && max_abs(next.gradient) < max_abs(pl.gradient);
            if (std::isfinite(next.value) && (next.value >= pl.value || tie)) {
                model.beta = std::move(cand);
                pl = std::move(next);
                accepted = true;
                break;
            }
        }
        model.iterations = it + 1;
        if (!accepted) break;
        model.log_likelihood = pl.value;
        model.loglik_trace.push_back(pl.value);
    }
    if (!model.converged) model.converged = max_abs(pl.gradient) < opts.tol;
    return model;
}

std::vector<double> cox_risk(const CoxModel& model, const Matrix& x) {
    if (x.cols() != model.beta.size())
        throw DimensionError("cox_risk: " + std::to_string(x.cols()) + " covariates, model has " +
                             std::to_string(model.beta.size()));
    std::vector<double> r(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) r[i] += x(i, j) * model.beta[j];
    return r;
}

Standardizer Standardizer::fit(const Matrix& x) {
    Standardizer s;
    s.mean = column_means(x);
    s.scale.assign(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double d = x(i, j) - s.mean[j];
            s.scale[j] += d * d;
        }
    for (auto& v : s.scale) {
        v = x.rows() ? std::sqrt(v / static_cast<double>(x.rows())) : 0.0;
        if (v < 1e-12) v = 1.0;
    }
    return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) throw DimensionError("standardize: column mismatch");
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
    return out;
}

}  // namespace omicscl::cox
