#include "omicscl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "omicscl/survmetrics.hpp"

namespace omicscl::train {

void TrainConfig::validate() const {
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (patience < 1 || patience >= max_epochs) throw std::invalid_argument("patience must be in [1, max_epochs)");
    if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
    if (!(lr_min > 0.0 && lr_min < lr_max)) throw std::invalid_argument("need 0 < lr_min < lr_max");
    if (cycle_epochs < 2) throw std::invalid_argument("cycle_epochs must be >= 2");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0))
        throw std::invalid_argument("invalid Adam hyperparameters");
    if (k_for_validation < 1) throw std::invalid_argument("k_for_validation must be >= 1");
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state, double lr,
               double weight_decay, const AdamOptions& opts) {
    if (params.size() != grads.size()) throw DimensionError("adam_step: params/grads count mismatch");
    if (state.m.empty()) {
        for (const Matrix* p : params) {
            state.m.emplace_back(p->rows(), p->cols());
            state.v.emplace_back(p->rows(), p->cols());
        }
    }
    if (state.m.size() != params.size()) throw DimensionError("adam_step: state does not match params");
    ++state.step;
    const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& p = *params[k];
        const Matrix& g = grads[k];
        require_same_shape(p, g, "adam_step");
        require_same_shape(p, state.m[k], "adam_step state");
        Matrix& m = state.m[k];
        Matrix& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] -= lr * weight_decay * p[i];
            m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
            v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + opts.eps);
        }
    }
}

double cyclical_lr(int epoch, const TrainConfig& cfg) {
    if (epoch < 0) throw std::invalid_argument("cyclical_lr: negative epoch");
    const double half = 0.5 * static_cast<double>(cfg.cycle_epochs);
    const double pos = static_cast<double>(epoch % cfg.cycle_epochs);
    const double frac = pos <= half ? pos / half : (static_cast<double>(cfg.cycle_epochs) - pos) / half;
    return cfg.lr_min + (cfg.lr_max - cfg.lr_min) * frac;
}

Model init_model(std::span<const std::string> modalities, std::span<const std::size_t> input_dims,
                 const EncoderConfig& base, std::uint64_t seed) {
    if (modalities.size() != input_dims.size()) throw DimensionError("init_model: one input dim per modality");
    Model m;
    const Rng root(seed);
    for (std::size_t v = 0; v < modalities.size(); ++v) {
        EncoderConfig cfg = base;
        cfg.input_dim = input_dims[v];
        Rng rng = root.derive("init/" + modalities[v]);
        m.modalities.push_back(modalities[v]);
        m.encoders.push_back(init_encoder(cfg, rng));
    }
    return m;
}

double validation_c_index(const Model& model, const SplitData& split, int k, const ValidationOptions& opts,
                          std::uint64_t seed) {
    const auto embeds = embed_all(model, split.views);
    const Matrix fused = cluster::fuse(embeds, opts.fusion);
    Rng rng = Rng(seed).derive("validation-kmeans");
    const auto km = cluster::kmeans_fit(fused, k, rng, opts.kmeans);
    const auto risk = cluster::cluster_risk(km.labels, k, split.surv);
    return surv::c_index(risk.patient_risk, split.surv.t, split.surv.e);
}

namespace {

std::vector<Matrix*> all_trainable(Model& m) {
    std::vector<Matrix*> out;
    for (auto& enc : m.encoders)
        for (Matrix* p : trainable(enc)) out.push_back(p);
    return out;
}

void check_split(const Model& m, const SplitData& s, const char* name) {
    if (s.views.size() != m.encoders.size())
        throw DimensionError(std::string(name) + " split has wrong number of modalities");
    for (const auto& v : s.views)
        if (v.rows() != s.size()) throw DimensionError(std::string(name) + " split views not aligned");
    if (s.size() == 0) throw std::invalid_argument(std::string(name) + " split is empty");
}

}  // namespace

TrainResult train(Model model, const SplitData& train_split, const SplitData& val_split,
                  const losses::LossConfig& loss_cfg, const TrainConfig& cfg, const ValidationOptions& val_opts,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
    cfg.validate();
    loss_cfg.validate();
    check_split(model, train_split, "train");
    check_split(model, val_split, "validation");
    if (static_cast<std::size_t>(cfg.k_for_validation) > val_split.size())
        throw std::invalid_argument("k_for_validation exceeds validation split size");

    Rng shuffle_rng = Rng(cfg.seed).derive("shuffle");
    AdamState adam;
    const AdamOptions adam_opts{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
    const std::size_t n = train_split.size();
    const std::size_t n_mod = model.encoders.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.model = model;
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = cyclical_lr(epoch, cfg);
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        std::size_t seen = 0;

        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            if (end - start < 2) continue;
            const std::span<const std::size_t> idx(order.data() + start, end - start);

            ad::Tape tape;
            std::vector<EncoderLeaves> leaves;
            std::vector<ad::Var> embeds;
            std::vector<ad::BatchMoments> moments(n_mod);
            for (std::size_t v = 0; v < n_mod; ++v) {
                leaves.push_back(bind(tape, model.encoders[v]));
                const ad::Var x = tape.constant(train_split.views[v].select_rows(idx));
                embeds.push_back(forward(tape, leaves[v], model.encoders[v], x, Mode::Train, &moments[v]));
            }
            const ad::Var fused = losses::fuse_mean(tape, embeds);
            const auto batch_surv = train_split.surv.select(idx);
            const auto terms = losses::total_loss(tape, embeds, fused, batch_surv, loss_cfg);

            const double ntx = tape.value(terms.ntxent).item();
            const double srv = tape.value(terms.survival).item();
            const double tot = tape.value(terms.total).item();
            if (!std::isfinite(ntx) || !std::isfinite(srv) || !std::isfinite(tot)) {
                std::ostringstream os;
                os << "non-finite loss at epoch " << epoch << ", batch starting " << start << ": "
                   << (!std::isfinite(ntx) ? "NT-Xent term" : !std::isfinite(srv) ? "survival term" : "total")
                   << " (ntxent=" << ntx << ", survival=" << srv << ")";
                throw NumericalError(os.str());
            }

            tape.backward(terms.total);
            std::vector<Matrix> grads;
            for (const auto& l : leaves)
                for (ad::Var var : l.vars) grads.push_back(tape.grad(var));
            for (const auto& g : grads)
                if (!g.all_finite()) throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch));
            for (std::size_t v = 0; v < n_mod; ++v) update_running_stats(model.encoders[v], moments[v], idx.size());
            const auto params = all_trainable(model);
            adam_step(params, grads, adam, lr, cfg.weight_decay, adam_opts);

            const double w = static_cast<double>(idx.size());
            rec.train_loss += w * tot;
            rec.train_ntxent += w * ntx;
            rec.train_survival += w * srv;
            seen += idx.size();
        }
        if (seen > 0) {
            rec.train_loss /= static_cast<double>(seen);
            rec.train_ntxent /= static_cast<double>(seen);
            rec.train_survival /= static_cast<double>(seen);
        }

        rec.val_c_index = validation_c_index(model, val_split, cfg.k_for_validation, val_opts, cfg.seed);
        result.report.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (result.report.best_epoch < 0 || rec.val_c_index > result.report.best_val_c_index) {
            result.report.best_epoch = epoch;
            result.report.best_val_c_index = rec.val_c_index;
            result.model = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            result.report.early_stopped = true;
            break;
        }
    }
    return result;
}

}  // namespace omicscl::train
