#pragma once

#include <span>
#include <vector>

#include "omicscl/matrix.hpp"

namespace omicscl::cox {

struct CoxOptions {
    double ridge = 1e-4;
    int max_iter = 100;
    double tol = 1e-8;       // max-norm of the penalized score
    int max_halvings = 30;
};

struct CoxModel {
    std::vector<double> beta;
    double log_likelihood = 0.0;  // penalized
    bool converged = false;
    int iterations = 0;
    std::vector<double> loglik_trace;  // accepted iterates; non-decreasing up to rounding
};

// Penalized Breslow partial log-likelihood and its gradient.
struct PartialLikelihood {
    double value = 0.0;
    std::vector<double> gradient;
    Matrix hessian;  // of the penalized log-likelihood (negative definite)
};

PartialLikelihood partial_likelihood(const Matrix& x, std::span<const double> time, std::span<const int> event,
                                     std::span<const double> beta, double ridge, bool with_hessian = true);

CoxModel cox_fit(const Matrix& x, std::span<const double> time, std::span<const int> event,
                 const CoxOptions& opts = {});

// Linear predictor x * beta.
std::vector<double> cox_risk(const CoxModel& model, const Matrix& x);

// Column standardization fitted on one matrix, applied to others.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& x);
    Matrix apply(const Matrix& x) const;
};

}  // namespace omicscl::cox
