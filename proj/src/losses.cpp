#include "omicscl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "omicscl/kernels.hpp"

namespace omicscl::losses {

void LossConfig::validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
    if (!(delta_time > 0.0)) throw std::invalid_argument("delta_time must be > 0");
    if (!(delta_dist > 0.0)) throw std::invalid_argument("delta_dist must be > 0");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!(lambda_pull >= 0.0) || !(lambda_push >= 0.0))
        throw std::invalid_argument("lambda_pull/lambda_push must be >= 0");
}

BatchSurvival BatchSurvival::select(std::span<const std::size_t> idx) const {
    BatchSurvival out;
    out.t.reserve(idx.size());
    out.e.reserve(idx.size());
    for (std::size_t i : idx) {
        out.t.push_back(t.at(i));
        out.e.push_back(e.at(i));
    }
    return out;
}

void BatchSurvival::validate() const {
    if (t.size() != e.size()) throw DimensionError("survival: t/e length mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] >= 0.0)) throw std::invalid_argument("survival: negative or NaN time");
        if (e[i] != 0 && e[i] != 1) throw std::invalid_argument("survival: event must be 0 or 1");
    }
}

// ------------------------------------------------------------------ NT-Xent

ad::Var ntxent_pair(ad::Tape& t, ad::Var zv, ad::Var zw, double tau, bool include_positive) {
    if (!(tau > 0.0)) throw std::invalid_argument("ntxent: tau must be > 0");
    const Matrix& rv = t.value(zv);
    const Matrix& rw = t.value(zw);
    require_same_shape(rv, rw, "ntxent_pair");
    const std::size_t n = rv.rows();
    if (n < 2) throw DimensionError("ntxent_pair: batch size must be >= 2");

    // Cosine similarity = dot product of normalized rows. Normalizing rows that
    // are already unit length leaves the value unchanged.
    const ad::Var a = ad::row_l2_normalize(t, zv);
    const ad::Var b = ad::row_l2_normalize(t, zw);
    const Matrix logits = (1.0 / tau) * kernels::gemm(t.value(a), t.value(b).transpose());

    // Softmax weights over each row's admissible denominator terms.
    Matrix soft(n, n);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j)
            if (include_positive || j != i) mx = std::max(mx, logits(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!include_positive && j == i) continue;
            soft(i, j) = std::exp(logits(i, j) - mx);
            z += soft(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) soft(i, j) /= z;
        loss += -logits(i, i) + mx + std::log(z);
    }
    loss /= static_cast<double>(n);

    return t.record(Matrix::scalar(loss), {a, b}, [a, b, soft, tau](ad::Tape& tp, const Matrix& g) {
        const std::size_t n = soft.rows();
        // d loss / d logits = (softmax - onehot(i)) / n
        Matrix dl = soft;
        for (std::size_t i = 0; i < n; ++i) dl(i, i) -= 1.0;
        const double s = g.item() / (static_cast<double>(n) * tau);
        dl = s * dl;
        tp.accumulate(a, kernels::gemm(dl, tp.value(b)));
        tp.accumulate(b, kernels::gemm(dl.transpose(), tp.value(a)));
    });
}

ad::Var ntxent_multimodal(ad::Tape& t, std::span<const ad::Var> embeds, double tau, bool include_positive) {
    if (embeds.size() < 2) throw DimensionError("ntxent_multimodal: need >= 2 modalities");
    std::vector<ad::Var> terms;
    for (std::size_t v = 0; v < embeds.size(); ++v)
        for (std::size_t w = 0; w < embeds.size(); ++w)
            if (v != w) terms.push_back(ntxent_pair(t, embeds[v], embeds[w], tau, include_positive));
    return ad::average(t, terms);
}

// ------------------------------------------------------- survival contrastive

ad::Var survival_contrastive(ad::Tape& t, ad::Var z, const BatchSurvival& surv, const LossConfig& cfg) {
    const Matrix& zv = t.value(z);
    const std::size_t n = zv.rows();
    if (surv.size() != n) throw DimensionError("survival_contrastive: survival/embedding row mismatch");

    struct Pair {
        std::size_t i, j;
        double weight;
        bool pull;
    };
    std::vector<Pair> pairs;
    std::size_t n_pull = 0, n_push = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dt = surv.t[i] - surv.t[j];
            const double w_push = cfg.tanh_weighting ? std::abs(std::tanh(dt)) : 1.0;
            if (std::abs(dt) >= cfg.delta_time) {
                pairs.push_back({i, j, w_push, false});
                ++n_push;
            } else if (surv.e[i] == 1 && surv.e[j] == 1) {
                pairs.push_back({i, j, cfg.tanh_weighting ? 1.0 - w_push : 1.0, true});
                ++n_pull;
            }
        }
    }
    const double pull_scale = n_pull ? cfg.lambda_pull / static_cast<double>(n_pull) : 0.0;
    const double push_scale = n_push ? cfg.lambda_push / static_cast<double>(n_push) : 0.0;

    double loss = 0.0;
    for (const auto& p : pairs) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < zv.cols(); ++c) {
            const double diff = zv(p.i, c) - zv(p.j, c);
            d2 += diff * diff;
        }
        if (p.pull) {
            loss += pull_scale * p.weight * d2;
        } else {
            const double hinge = std::max(0.0, cfg.delta_dist - std::sqrt(d2));
            loss += push_scale * p.weight * hinge * hinge;
        }
    }

    const double margin = cfg.delta_dist;
    return t.record(Matrix::scalar(loss), {z},
                    [z, pairs, pull_scale, push_scale, margin](ad::Tape& tp, const Matrix& g) {
        const Matrix& zv = tp.value(z);
        const std::size_t d = zv.cols();
        Matrix dz(zv.rows(), d);
        std::vector<double> diff(d);
        for (const auto& p : pairs) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                diff[c] = zv(p.i, c) - zv(p.j, c);
                d2 += diff[c] * diff[c];
            }
            double coef;
            if (p.pull) {
                coef = 2.0 * pull_scale * p.weight;
            } else {
                const double dist = std::sqrt(d2);
                const double hinge = margin - dist;
                // Coincident points: the hinge has no defined direction; use the zero subgradient.
                if (hinge <= 0.0 || dist == 0.0) continue;
                coef = -2.0 * push_scale * p.weight * hinge / dist;
            }
            coef *= g.item();
            for (std::size_t c = 0; c < d; ++c) {
                dz(p.i, c) += coef * diff[c];
                dz(p.j, c) -= coef * diff[c];
            }
        }
        tp.accumulate(z, dz);
    });
}

ad::Var fuse_mean(ad::Tape& t, std::span<const ad::Var> embeds) {
    return ad::row_l2_normalize(t, ad::average(t, embeds));
}

LossTerms total_loss(ad::Tape& t, std::span<const ad::Var> embeds, ad::Var fused,
                     const BatchSurvival& surv, const LossConfig& cfg) {
    cfg.validate();
    LossTerms terms;
    terms.ntxent = ntxent_multimodal(t, embeds, cfg.tau, cfg.include_positive_in_denominator);
    if (cfg.surv_target == SurvTarget::Fused) {
        terms.survival = survival_contrastive(t, fused, surv, cfg);
    } else {
        std::vector<ad::Var> per;
        for (ad::Var e : embeds) per.push_back(survival_contrastive(t, e, surv, cfg));
        terms.survival = ad::average(t, per);
    }
    terms.total = ad::add(t, terms.ntxent, ad::scale(t, terms.survival, cfg.alpha));
    return terms;
}

// --------------------------------------------------------------- value-only

double ntxent_pair(const Matrix& zv, const Matrix& zw, double tau, bool include_positive) {
    ad::Tape t;
    return t.value(ntxent_pair(t, t.constant(zv), t.constant(zw), tau, include_positive)).item();
}

double ntxent_multimodal(std::span<const Matrix> embeds, double tau, bool include_positive) {
    ad::Tape t;
    std::vector<ad::Var> vars;
    for (const auto& e : embeds) vars.push_back(t.constant(e));
    return t.value(ntxent_multimodal(t, vars, tau, include_positive)).item();
}

double survival_contrastive(const Matrix& z, const BatchSurvival& surv, const LossConfig& cfg) {
    ad::Tape t;
    return t.value(survival_contrastive(t, t.constant(z), surv, cfg)).item();
}

double total_loss(std::span<const Matrix> embeds, const Matrix& fused, const BatchSurvival& surv,
                  const LossConfig& cfg) {
    ad::Tape t;
    std::vector<ad::Var> vars;
    for (const auto& e : embeds) vars.push_back(t.constant(e));
    return t.value(total_loss(t, vars, t.constant(fused), surv, cfg).total).item();
}

}  // namespace omicscl::losses
