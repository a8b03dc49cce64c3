#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "omicscl/matrix.hpp"
#include "omicscl/rng.hpp"
#include "omicscl/tape.hpp"

namespace omicscl {

struct EncoderConfig {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 128;
    std::size_t proj_dim = 64;
    double bn_eps = 1e-5;
    double bn_momentum = 0.1;

    void validate() const;
};

// One modality's encoder: linear -> batch norm -> ReLU -> linear -> l2-normalize.
struct EncoderParams {
    EncoderConfig config;
    Matrix w1;     // input_dim x hidden_dim
    Matrix b1;     // 1 x hidden_dim
    Matrix gamma;  // 1 x hidden_dim
    Matrix beta;   // 1 x hidden_dim
    Matrix w2;     // hidden_dim x proj_dim
    Matrix b2;     // 1 x proj_dim
    std::vector<double> running_mean;
    std::vector<double> running_var;
};

enum class Mode { Train, Eval };

inline constexpr std::array<std::string_view, 6> kTrainableNames{"W1", "b1", "gamma", "beta", "W2", "b2"};

// Glorot-uniform weights, zero biases, identity batch norm.
EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng);

std::array<Matrix*, 6> trainable(EncoderParams& p);
std::array<const Matrix*, 6> trainable(const EncoderParams& p);

// Tape handles for one encoder's trainable parameters.
struct EncoderLeaves {
    std::array<ad::Var, 6> vars;
    ad::Var w1() const { return vars[0]; }
    ad::Var b1() const { return vars[1]; }
    ad::Var gamma() const { return vars[2]; }
    ad::Var beta() const { return vars[3]; }
    ad::Var w2() const { return vars[4]; }
    ad::Var b2() const { return vars[5]; }
};

EncoderLeaves bind(ad::Tape& tape, const EncoderParams& p);

// Records the forward pass on the tape. Train mode normalizes with batch
// statistics and reports them through `moments`; Eval mode uses p's running
// statistics.
ad::Var forward(ad::Tape& tape, const EncoderLeaves& leaves, const EncoderParams& p, ad::Var x,
                Mode mode, ad::BatchMoments* moments = nullptr);

// Exponential moving average of batch moments (unbiased variance).
void update_running_stats(EncoderParams& p, const ad::BatchMoments& moments, std::size_t batch_size);

// Train mode also updates p's running statistics.
Matrix forward(EncoderParams& p, const Matrix& x, Mode mode);

// Eval-mode forward; pure in (p, x).
Matrix embed(const EncoderParams& p, const Matrix& x);

// Encoders for all modalities of a cohort, in modality order.
struct Model {
    std::vector<std::string> modalities;
    std::vector<EncoderParams> encoders;
};

std::vector<Matrix> embed_all(const Model& model, std::span<const Matrix> views);

nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

// JSON checkpoint: named tensors with shapes; float64 values round-trip exactly.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& config_echo);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace omicscl
