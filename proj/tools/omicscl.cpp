#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "omicscl/config.hpp"
#include "omicscl/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace omicscl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::vector<std::string> overrides;  // KEY=VALUE
    std::optional<double> alpha;
    bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "seed (overrides config)");
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--set", c.overrides, "override a config key, KEY=VALUE (VALUE parsed as JSON when possible)");
    cmd->add_option("--alpha", c.alpha, "survival loss weight (overrides config)");
    cmd->add_flag("-v,--verbose", c.verbose, "per-epoch progress on stderr");
}

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& ex) {
        throw ConfigError(p.string() + " is not valid JSON: " + ex.what());
    }
}

Config build_config(const Common& c, const std::optional<json>& fallback = std::nullopt) {
    json j = json::object();
    if (!c.config_path.empty())
        j = read_json_file(c.config_path);
    else if (fallback)
        j = *fallback;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        json parsed = json::parse(value, nullptr, false);
        j[key] = parsed.is_discarded() ? json(value) : parsed;
    }
    if (c.alpha) j["alpha"] = *c.alpha;
    Config cfg = Config::from_json(j);
    if (c.seed) cfg.set_seed(*c.seed);
    cfg.validate();
    return cfg;
}

fs::path ensure_dir(const std::string& dir) {
    fs::create_directories(dir);
    return fs::path(dir);
}

std::function<void(const train::EpochRecord&)> progress(bool verbose) {
    if (!verbose) return {};
    return [](const train::EpochRecord& e) {
        std::fprintf(stderr, "epoch %4d lr %.3g loss %.5f (ntxent %.5f surv %.5f) val_c %.4f\n", e.epoch, e.lr,
                     e.train_loss, e.train_ntxent, e.train_survival, e.val_c_index);
    };
}

int cmd_generate(const Common& c) {
    const Config cfg = build_config(c);
    const fs::path out = ensure_dir(c.out);
    const auto cohort = data::generate_synthetic(cfg.synthetic);
    data::write_cohort(out, cohort);
    pipeline::write_json(out / "config.json", cfg.to_json());
    std::cout << "wrote " << cohort.size() << " patients to " << out.string() << '\n';
    return kExitOk;
}

int cmd_train(const Common& c) {
    const Config cfg = build_config(c);
    const fs::path out = ensure_dir(c.out);
    const auto prep = pipeline::prepare(cfg);
    const auto result = pipeline::run_training(cfg, prep, progress(c.verbose));
    save_checkpoint(out / "checkpoint.json", result.model, cfg.to_json());
    pipeline::write_train_report(out / "train_report.jsonl", cfg, result.report);
    pipeline::write_embeddings_csv(out / "embeddings.csv", cfg, result.model, prep);
    std::cout << "best epoch " << result.report.best_epoch << " val C-index " << result.report.best_val_c_index
              << " (" << result.report.epochs.size() << " epochs)\n";
    return kExitOk;
}

std::pair<Config, Model> config_and_model(const Common& c, const std::string& checkpoint) {
    const json ckpt = read_json_file(checkpoint);
    std::optional<json> fallback;
    if (ckpt.contains("config")) fallback = ckpt.at("config");
    return {build_config(c, fallback), model_from_json(ckpt)};
}

int cmd_evaluate(const Common& c, const std::string& checkpoint, std::optional<int> k, std::optional<std::string> split) {
    auto [cfg, model] = config_and_model(c, checkpoint);
    if (k) cfg.k = *k;
    if (split) cfg.eval_split = *split;
    cfg.validate();
    const fs::path out = ensure_dir(c.out);
    const auto prep = pipeline::prepare(cfg);
    const auto report = pipeline::evaluate(cfg, model, prep, cfg.k, cfg.eval_split);
    json j = report.to_json();
    j["config"] = cfg.to_json();
    j["checkpoint"] = checkpoint;
    pipeline::write_json(out / "eval_report.json", j);
    pipeline::write_km_csv(out / "km_curves.csv", cfg, report);
    pipeline::write_clusters_csv(out / "clusters.csv", cfg, prep.split(cfg.eval_split), report);
    std::cout << cfg.eval_split << " C-index " << report.c_index << " (k=" << cfg.k << ")\n";
    return kExitOk;
}

int cmd_ablate(const Common& c) {
    const Config cfg = build_config(c);
    const fs::path out = ensure_dir(c.out);
    const auto rep = pipeline::ablate(cfg);
    pipeline::write_json(out / "ablation.json", rep.to_json());
    std::cout << "test C-index alpha=" << rep.with_survival.alpha << ": " << rep.with_survival.test_c_index
              << ", alpha=0: " << rep.without_survival.test_c_index << ", delta " << rep.delta << '\n';
    return kExitOk;
}

int cmd_sweep(const Common& c, const std::string& checkpoint, std::optional<int> k_min, std::optional<int> k_max) {
    Config cfg;
    Model model;
    if (!checkpoint.empty())
        std::tie(cfg, model) = config_and_model(c, checkpoint);
    else
        cfg = build_config(c);
    if (k_min) cfg.sweep_k_min = *k_min;
    if (k_max) cfg.sweep_k_max = *k_max;
    cfg.validate();
    const fs::path out = ensure_dir(c.out);
    const auto prep = pipeline::prepare(cfg);
    if (checkpoint.empty()) model = pipeline::run_training(cfg, prep, progress(c.verbose)).model;
    const auto rows = pipeline::sweep(cfg, model, prep, cfg.sweep_k_min, cfg.sweep_k_max);
    pipeline::write_json(out / "sweep.json", json{{"config", cfg.to_json()}, {"rows", pipeline::sweep_to_json(rows)}});
    pipeline::write_sweep_csv(out / "sweep.csv", cfg, rows);
    for (const auto& r : rows)
        std::cout << "k=" << r.k << " c_index " << r.omicscl_c_index << " cox(emb) " << r.cox_embeddings_c_index
                  << " cox(onehot) " << r.cox_onehot_c_index << " purity "
                  << (r.purity ? std::to_string(*r.purity) : "null") << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OmicsCL: survival-aware contrastive multi-omics subtyping"};
    app.require_subcommand(1);

    Common common;
    std::string checkpoint;
    std::optional<int> k, k_min, k_max;
    std::optional<std::string> split;

    auto* gen = app.add_subcommand("generate", "write a synthetic cohort as CSV");
    auto* tr = app.add_subcommand("train", "train encoders; writes checkpoint, report and embeddings");
    auto* ev = app.add_subcommand("evaluate", "cluster and score a trained model");
    auto* ab = app.add_subcommand("ablate", "train with and without the survival loss");
    auto* sw = app.add_subcommand("sweep", "metrics over a range of cluster counts");
    for (auto* cmd : {gen, tr, ev, ab, sw}) add_common(cmd, common);
    ev->add_option("--checkpoint", checkpoint, "checkpoint.json from train")->required()->check(CLI::ExistingFile);
    ev->add_option("--k", k, "number of clusters");
    ev->add_option("--split", split, "train|val|test");
    sw->add_option("--checkpoint", checkpoint, "reuse a trained model instead of training")->check(CLI::ExistingFile);
    sw->add_option("--k-min", k_min, "smallest k");
    sw->add_option("--k-max", k_max, "largest k");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(common);
        if (tr->parsed()) return cmd_train(common);
        if (ev->parsed()) return cmd_evaluate(common, checkpoint, k, split);
        if (ab->parsed()) return cmd_ablate(common);
        if (sw->parsed()) return cmd_sweep(common, checkpoint, k_min, k_max);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
