#include "omicscl/encoder.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace omicscl {

using nlohmann::json;

void EncoderConfig::validate() const {
    if (input_dim < 1 || hidden_dim < 1 || proj_dim < 1)
        throw std::invalid_argument("encoder dims must be >= 1");
    if (!(bn_eps > 0.0)) throw std::invalid_argument("bn_eps must be > 0");
    if (!(bn_momentum > 0.0 && bn_momentum <= 1.0))
        throw std::invalid_argument("bn_momentum must be in (0, 1]");
}

namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (auto& v : w.values()) v = rng.uniform(-bound, bound);
    return w;
}

}  // namespace

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderParams p;
    p.config = cfg;
    p.w1 = glorot(cfg.input_dim, cfg.hidden_dim, rng);
    p.b1 = Matrix(1, cfg.hidden_dim);
    p.gamma = Matrix(1, cfg.hidden_dim, 1.0);
    p.beta = Matrix(1, cfg.hidden_dim);
    p.w2 = glorot(cfg.hidden_dim, cfg.proj_dim, rng);
    p.b2 = Matrix(1, cfg.proj_dim);
    p.running_mean.assign(cfg.hidden_dim, 0.0);
    p.running_var.assign(cfg.hidden_dim, 1.0);
    return p;
}

std::array<Matrix*, 6> trainable(EncoderParams& p) {
    return {&p.w1, &p.b1, &p.gamma, &p.beta, &p.w2, &p.b2};
}

std::array<const Matrix*, 6> trainable(const EncoderParams& p) {
    return {&p.w1, &p.b1, &p.gamma, &p.beta, &p.w2, &p.b2};
}

EncoderLeaves bind(ad::Tape& tape, const EncoderParams& p) {
    EncoderLeaves l;
    const auto params = trainable(p);
    for (std::size_t i = 0; i < params.size(); ++i) l.vars[i] = tape.leaf(*params[i]);
    return l;
}

ad::Var forward(ad::Tape& tape, const EncoderLeaves& leaves, const EncoderParams& p, ad::Var x,
                Mode mode, ad::BatchMoments* moments) {
    const EncoderConfig& cfg = p.config;
    if (tape.value(x).cols() != cfg.input_dim) {
        throw DimensionError("encoder: input has " + std::to_string(tape.value(x).cols()) +
                             " features, expected " + std::to_string(cfg.input_dim));
    }
    ad::Var h = ad::add_row(tape, ad::matmul(tape, x, leaves.w1()), leaves.b1());
    if (mode == Mode::Train) {
        if (tape.value(x).rows() < 2) throw DimensionError("encoder: Train mode needs batch size >= 2");
        h = ad::batch_norm_train(tape, h, leaves.gamma(), leaves.beta(), cfg.bn_eps, moments);
    } else {
        h = ad::batch_norm_eval(tape, h, leaves.gamma(), leaves.beta(), p.running_mean, p.running_var,
                                cfg.bn_eps);
    }
    h = ad::relu(tape, h);
    ad::Var z = ad::add_row(tape, ad::matmul(tape, h, leaves.w2()), leaves.b2());
    return ad::row_l2_normalize(tape, z);
}

void update_running_stats(EncoderParams& p, const ad::BatchMoments& moments, std::size_t batch_size) {
    const double mom = p.config.bn_momentum;
    const double unbias = static_cast<double>(batch_size) / static_cast<double>(batch_size - 1);
    for (std::size_t c = 0; c < p.config.hidden_dim; ++c) {
        p.running_mean[c] = (1.0 - mom) * p.running_mean[c] + mom * moments.mean[c];
        // Floor keeps the variance strictly positive on constant features.
        p.running_var[c] = std::max((1.0 - mom) * p.running_var[c] + mom * moments.var[c] * unbias,
                                    std::numeric_limits<double>::min());
    }
}

Matrix forward(EncoderParams& p, const Matrix& x, Mode mode) {
    ad::Tape tape;
    const auto leaves = bind(tape, p);
    ad::BatchMoments m;
    Matrix z = tape.value(forward(tape, leaves, p, tape.constant(x), mode, &m));
    if (mode == Mode::Train) update_running_stats(p, m, x.rows());
    return z;
}

Matrix embed(const EncoderParams& p, const Matrix& x) {
    ad::Tape tape;
    const auto leaves = bind(tape, p);
    return tape.value(forward(tape, leaves, p, tape.constant(x), Mode::Eval));
}

std::vector<Matrix> embed_all(const Model& model, std::span<const Matrix> views) {
    if (views.size() != model.encoders.size())
        throw DimensionError("embed_all: expected " + std::to_string(model.encoders.size()) + " views");
    std::vector<Matrix> out;
    out.reserve(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) out.push_back(embed(model.encoders[v], views[v]));
    return out;
}

// ------------------------------------------------------------ checkpoint

namespace {

json tensor_json(const Matrix& m) {
    return json{{"shape", {m.rows(), m.cols()}},
                {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix tensor_from_json(const json& j, const std::string& name) {
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw std::runtime_error("checkpoint: tensor " + name + " is not 2-D");
    return Matrix(shape[0], shape[1], j.at("data").get<std::vector<double>>());
}

}  // namespace

json to_json(const Model& model) {
    json mods = json::array();
    for (std::size_t v = 0; v < model.encoders.size(); ++v) {
        const EncoderParams& p = model.encoders[v];
        json tensors = json::object();
        const auto params = trainable(p);
        for (std::size_t i = 0; i < params.size(); ++i)
            tensors[std::string(kTrainableNames[i])] = tensor_json(*params[i]);
        tensors["running_mean"] = tensor_json(Matrix::row_vector(p.running_mean));
        tensors["running_var"] = tensor_json(Matrix::row_vector(p.running_var));
        mods.push_back({{"name", model.modalities.at(v)},
                        {"config",
                         {{"input_dim", p.config.input_dim},
                          {"hidden_dim", p.config.hidden_dim},
                          {"proj_dim", p.config.proj_dim},
                          {"bn_eps", p.config.bn_eps},
                          {"bn_momentum", p.config.bn_momentum}}},
                        {"tensors", tensors}});
    }
    return json{{"format", "omicscl-checkpoint-v1"}, {"modalities", mods}};
}

Model model_from_json(const json& j) {
    if (j.value("format", "") != "omicscl-checkpoint-v1")
        throw std::runtime_error("checkpoint: unrecognized format");
    Model model;
    for (const auto& m : j.at("modalities")) {
        EncoderParams p;
        const auto& c = m.at("config");
        p.config.input_dim = c.at("input_dim").get<std::size_t>();
        p.config.hidden_dim = c.at("hidden_dim").get<std::size_t>();
        p.config.proj_dim = c.at("proj_dim").get<std::size_t>();
        p.config.bn_eps = c.at("bn_eps").get<double>();
        p.config.bn_momentum = c.at("bn_momentum").get<double>();
        p.config.validate();
        const auto& t = m.at("tensors");
        auto params = trainable(p);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const std::string name(kTrainableNames[i]);
            *params[i] = tensor_from_json(t.at(name), name);
        }
        const auto rm = tensor_from_json(t.at("running_mean"), "running_mean");
        const auto rv = tensor_from_json(t.at("running_var"), "running_var");
        p.running_mean.assign(rm.values().begin(), rm.values().end());
        p.running_var.assign(rv.values().begin(), rv.values().end());
        const auto& cfg = p.config;
        if (p.w1.rows() != cfg.input_dim || p.w1.cols() != cfg.hidden_dim ||
            p.w2.rows() != cfg.hidden_dim || p.w2.cols() != cfg.proj_dim ||
            p.running_mean.size() != cfg.hidden_dim || p.running_var.size() != cfg.hidden_dim)
            throw std::runtime_error("checkpoint: tensor shapes disagree with encoder config");
        model.modalities.push_back(m.at("name").get<std::string>());
        model.encoders.push_back(std::move(p));
    }
    return model;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const json& config_echo) {
    json j = to_json(model);
    j["config"] = config_echo;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
    return model_from_json(json::parse(in));
}

}  // namespace omicscl
