#pragma once

#include <span>
#include <vector>

#include "omicscl/matrix.hpp"
#include "omicscl/tape.hpp"

namespace omicscl::losses {

// Which embedding the survival term sees.
enum class SurvTarget {
    Fused,            // mean of modality embeddings, re-normalized
    PerModalityMean,  // survival term averaged over modalities
};

struct LossConfig {
    double tau = 0.1;
    double delta_time = 1.0;  // survival-time threshold, normalized time units
    double delta_dist = 1.0;  // embedding-distance margin
    double lambda_pull = 1.0;
    double lambda_push = 1.0;
    double alpha = 10.0;
    bool tanh_weighting = false;
    // false: denominator sums over j != i only; true: standard NT-Xent.
    bool include_positive_in_denominator = false;
    SurvTarget surv_target = SurvTarget::Fused;

    void validate() const;
};

struct BatchSurvival {
    std::vector<double> t;
    std::vector<int> e;

    std::size_t size() const noexcept { return t.size(); }
    BatchSurvival select(std::span<const std::size_t> idx) const;
    void validate() const;
};

// Mean over rows i of -log(exp(s_ii/tau) / sum_j exp(s_ij/tau)), s = cosine
// similarity between rows of zv and zw.
ad::Var ntxent_pair(ad::Tape& t, ad::Var zv, ad::Var zw, double tau, bool include_positive = false);

// Mean of ntxent_pair over all ordered modality pairs (v, w), v != w.
ad::Var ntxent_multimodal(ad::Tape& t, std::span<const ad::Var> embeds, double tau,
                          bool include_positive = false);

// Pairwise pull/push regularizer on survival-time differences.
ad::Var survival_contrastive(ad::Tape& t, ad::Var z, const BatchSurvival& surv, const LossConfig& cfg);

// Mean of the modality embeddings, projected back to the unit sphere.
ad::Var fuse_mean(ad::Tape& t, std::span<const ad::Var> embeds);

struct LossTerms {
    ad::Var total;
    ad::Var ntxent;
    ad::Var survival;
};

// ntxent_multimodal + alpha * survival term. `fused` is used when
// cfg.surv_target == Fused.
LossTerms total_loss(ad::Tape& t, std::span<const ad::Var> embeds, ad::Var fused,
                     const BatchSurvival& surv, const LossConfig& cfg);

// Value-only conveniences.
double ntxent_pair(const Matrix& zv, const Matrix& zw, double tau, bool include_positive = false);
double ntxent_multimodal(std::span<const Matrix> embeds, double tau, bool include_positive = false);
double survival_contrastive(const Matrix& z, const BatchSurvival& surv, const LossConfig& cfg);
double total_loss(std::span<const Matrix> embeds, const Matrix& fused, const BatchSurvival& surv,
                  const LossConfig& cfg);

}  // namespace omicscl::losses
