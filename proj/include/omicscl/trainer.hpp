#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "omicscl/cluster.hpp"
#include "omicscl/encoder.hpp"
#include "omicscl/losses.hpp"

namespace omicscl::train {

struct TrainConfig {
    int max_epochs = 1000;
    int patience = 20;
    int batch_size = 64;
    double lr_min = 1e-5;
    double lr_max = 1e-3;
    int cycle_epochs = 20;
    double weight_decay = 1e-6;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    int k_for_validation = 4;

    void validate() const;
};

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    long step = 0;
};

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One Adam update with bias correction. Weight decay is decoupled:
// p <- p - lr * wd * p before the Adam delta.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state, double lr,
               double weight_decay, const AdamOptions& opts = {});

// Triangular wave: lr_min at epoch 0, lr_max at cycle_epochs / 2, period cycle_epochs.
double cyclical_lr(int epoch, const TrainConfig& cfg);

// Normalized views and survival for one split.
struct SplitData {
    std::vector<Matrix> views;
    losses::BatchSurvival surv;

    std::size_t size() const noexcept { return surv.size(); }
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_ntxent = 0.0;
    double train_survival = 0.0;
    double val_c_index = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_val_c_index = 0.0;
    bool early_stopped = false;
};

struct TrainResult {
    Model model;  // parameters of the best epoch
    TrainReport report;
};

struct ValidationOptions {
    cluster::Fusion fusion = cluster::Fusion::Concat;
    cluster::KMeansOptions kmeans;
};

Model init_model(std::span<const std::string> modalities, std::span<const std::size_t> input_dims,
                 const EncoderConfig& base, std::uint64_t seed);

// C-index of cluster-derived risks: KMeans with k clusters fitted on the
// split's fused embeddings, risks from the split's own survival.
double validation_c_index(const Model& model, const SplitData& split, int k, const ValidationOptions& opts,
                          std::uint64_t seed);

TrainResult train(Model model, const SplitData& train_split, const SplitData& val_split,
                  const losses::LossConfig& loss_cfg, const TrainConfig& cfg, const ValidationOptions& val_opts,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace omicscl::train
