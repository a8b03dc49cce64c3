#include "omicscl/config.hpp"

#include <fstream>
#include <set>

namespace omicscl {

using nlohmann::json;

namespace {

std::string surv_target_name(losses::SurvTarget t) {
    return t == losses::SurvTarget::Fused ? "fused" : "per_modality_mean";
}

losses::SurvTarget parse_surv_target(const std::string& s) {
    if (s == "fused") return losses::SurvTarget::Fused;
    if (s == "per_modality_mean") return losses::SurvTarget::PerModalityMean;
    throw ConfigError("surv_target must be fused|per_modality_mean, got '" + s + "'");
}

}  // namespace

void Config::set_seed(std::uint64_t s) {
    seed = s;
    synthetic.seed = s;
    split.seed = s;
    train.seed = s;
}

void Config::validate() const {
    try {
        if (modalities.size() < 2) throw ConfigError("need at least 2 modalities");
        if (data_dir.empty()) {
            synthetic.validate();
            if (synthetic.modality_names != modalities)
                throw ConfigError("synthetic modality names must match 'modalities'");
        }
        split.validate();
        EncoderConfig e = encoder;
        e.input_dim = 1;
        e.validate();
        loss.validate();
        train.validate();
        if (k < 1) throw ConfigError("k must be >= 1");
        if (kmeans_n_init < 1 || kmeans_max_iter < 1) throw ConfigError("kmeans_n_init/kmeans_max_iter must be >= 1");
        if (cox_ridge < 0.0) throw ConfigError("cox_ridge must be >= 0");
        if (sweep_k_min < 2 || sweep_k_max < sweep_k_min) throw ConfigError("need 2 <= sweep_k_min <= sweep_k_max");
        if (eval_split != "train" && eval_split != "val" && eval_split != "test")
            throw ConfigError("eval_split must be train|val|test");
        if (cluster_fit != "train" && cluster_fit != "split") throw ConfigError("cluster_fit must be train|split");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(ex.what());
    }
}

json Config::to_json() const {
    return json{
        {"seed", seed},
        {"data_dir", data_dir},
        {"modalities", modalities},
        {"synthetic_n_patients", synthetic.n_patients},
        {"synthetic_n_subtypes", synthetic.n_subtypes},
        {"synthetic_latent_dim", synthetic.latent_dim},
        {"synthetic_feature_dims", synthetic.feature_dims},
        {"synthetic_noise", synthetic.noise},
        {"synthetic_hazard_rates", synthetic.hazard_rates},
        {"synthetic_censoring", synthetic.censoring},
        {"split_train", split.train},
        {"split_val", split.val},
        {"split_test", split.test},
        {"hidden_dim", encoder.hidden_dim},
        {"proj_dim", encoder.proj_dim},
        {"bn_eps", encoder.bn_eps},
        {"bn_momentum", encoder.bn_momentum},
        {"tau", loss.tau},
        {"delta_time", loss.delta_time},
        {"delta_dist", loss.delta_dist},
        {"lambda_pull", loss.lambda_pull},
        {"lambda_push", loss.lambda_push},
        {"alpha", loss.alpha},
        {"tanh_weighting", loss.tanh_weighting},
        {"include_positive_in_denominator", loss.include_positive_in_denominator},
        {"surv_target", surv_target_name(loss.surv_target)},
        {"max_epochs", train.max_epochs},
        {"patience", train.patience},
        {"batch_size", train.batch_size},
        {"lr_min", train.lr_min},
        {"lr_max", train.lr_max},
        {"cycle_epochs", train.cycle_epochs},
        {"weight_decay", train.weight_decay},
        {"adam_beta1", train.adam_beta1},
        {"adam_beta2", train.adam_beta2},
        {"adam_eps", train.adam_eps},
        {"k_for_validation", train.k_for_validation},
        {"k", k},
        {"fusion", cluster::to_string(fusion)},
        {"kmeans_n_init", kmeans_n_init},
        {"kmeans_max_iter", kmeans_max_iter},
        {"cox_ridge", cox_ridge},
        {"sweep_k_min", sweep_k_min},
        {"sweep_k_max", sweep_k_max},
        {"eval_split", eval_split},
        {"cluster_fit", cluster_fit},
    };
}

Config Config::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    Config c;
    const json defaults = c.to_json();
    std::vector<std::string> unknown;
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!defaults.contains(it.key())) unknown.push_back(it.key());
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }

    json merged = defaults;
    merged.update(j);
    try {
        c.set_seed(merged.at("seed").get<std::uint64_t>());
        c.data_dir = merged.at("data_dir").get<std::string>();
        c.modalities = merged.at("modalities").get<std::vector<std::string>>();
        c.synthetic.modality_names = c.modalities;
        c.synthetic.n_patients = merged.at("synthetic_n_patients").get<std::size_t>();
        c.synthetic.n_subtypes = merged.at("synthetic_n_subtypes").get<std::size_t>();
        c.synthetic.latent_dim = merged.at("synthetic_latent_dim").get<std::size_t>();
        c.synthetic.feature_dims = merged.at("synthetic_feature_dims").get<std::vector<std::size_t>>();
        c.synthetic.noise = merged.at("synthetic_noise").get<double>();
        c.synthetic.hazard_rates = merged.at("synthetic_hazard_rates").get<std::vector<double>>();
        c.synthetic.censoring = merged.at("synthetic_censoring").get<double>();
        c.split.train = merged.at("split_train").get<double>();
        c.split.val = merged.at("split_val").get<double>();
        c.split.test = merged.at("split_test").get<double>();
        c.encoder.hidden_dim = merged.at("hidden_dim").get<std::size_t>();
        c.encoder.proj_dim = merged.at("proj_dim").get<std::size_t>();
        c.encoder.bn_eps = merged.at("bn_eps").get<double>();
        c.encoder.bn_momentum = merged.at("bn_momentum").get<double>();
        c.loss.tau = merged.at("tau").get<double>();
        c.loss.delta_time = merged.at("delta_time").get<double>();
        c.loss.delta_dist = merged.at("delta_dist").get<double>();
        c.loss.lambda_pull = merged.at("lambda_pull").get<double>();
        c.loss.lambda_push = merged.at("lambda_push").get<double>();
        c.loss.alpha = merged.at("alpha").get<double>();
        c.loss.tanh_weighting = merged.at("tanh_weighting").get<bool>();
        c.loss.include_positive_in_denominator = merged.at("include_positive_in_denominator").get<bool>();
        c.loss.surv_target = parse_surv_target(merged.at("surv_target").get<std::string>());
        c.train.max_epochs = merged.at("max_epochs").get<int>();
        c.train.patience = merged.at("patience").get<int>();
        c.train.batch_size = merged.at("batch_size").get<int>();
        c.train.lr_min = merged.at("lr_min").get<double>();
        c.train.lr_max = merged.at("lr_max").get<double>();
        c.train.cycle_epochs = merged.at("cycle_epochs").get<int>();
        c.train.weight_decay = merged.at("weight_decay").get<double>();
        c.train.adam_beta1 = merged.at("adam_beta1").get<double>();
        c.train.adam_beta2 = merged.at("adam_beta2").get<double>();
        c.train.adam_eps = merged.at("adam_eps").get<double>();
        c.train.k_for_validation = merged.at("k_for_validation").get<int>();
        c.k = merged.at("k").get<int>();
        c.fusion = cluster::parse_fusion(merged.at("fusion").get<std::string>());
        c.kmeans_n_init = merged.at("kmeans_n_init").get<int>();
        c.kmeans_max_iter = merged.at("kmeans_max_iter").get<int>();
        c.cox_ridge = merged.at("cox_ridge").get<double>();
        c.sweep_k_min = merged.at("sweep_k_min").get<int>();
        c.sweep_k_max = merged.at("sweep_k_max").get<int>();
        c.eval_split = merged.at("eval_split").get<std::string>();
        c.cluster_fit = merged.at("cluster_fit").get<std::string>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config type error: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    c.validate();
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& ex) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + ex.what());
    }
    return Config::from_json(j);
}

}  // namespace omicscl
