#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "omicscl/clustmetrics.hpp"
#include "omicscl/pipeline.hpp"

using namespace omicscl;
namespace fs = std::filesystem;

namespace {

Config small_config(std::uint64_t seed) {
    Config c;
    c.set_seed(seed);
    c.synthetic.n_patients = 150;
    c.synthetic.feature_dims = {20, 15, 10};
    c.encoder.hidden_dim = 32;
    c.encoder.proj_dim = 16;
    c.train.max_epochs = 15;
    c.train.patience = 5;
    c.train.batch_size = 32;
    c.sweep_k_max = 5;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("normalization is fitted on training rows only") {
    const Config cfg = small_config(1);
    const auto p = pipeline::prepare(cfg);
    CHECK(p.train.rows.size() == p.train.patient_ids.size());
    for (const auto& z : p.zscore) CHECK(z.fitted_on == p.train.patient_ids);
    CHECK(p.time_scale.fitted_on == p.train.patient_ids);
    CHECK(p.train.rows.size() + p.val.rows.size() + p.test.rows.size() == p.cohort.size());
}

TEST_CASE("evaluation report has every metric field") {
    const Config cfg = small_config(2);
    const auto p = pipeline::prepare(cfg);
    const auto r = pipeline::run_training(cfg, p);
    const auto ev = pipeline::evaluate(cfg, r.model, p, 4, "test");
    const auto j = ev.to_json();
    for (const char* key : {"c_index", "logrank_statistic", "logrank_p", "silhouette", "purity", "ari", "nmi",
                            "accuracy_raw", "accuracy_matched", "cluster_sizes"}) {
        INFO(key);
        CHECK(j.contains(key));
    }
    CHECK_FALSE(j["purity"].is_null());
    std::size_t total = 0;
    for (auto s : ev.cluster_sizes) total += s;
    CHECK(total == p.test.rows.size());
    CHECK_THROWS(pipeline::evaluate(cfg, r.model, p, 1000, "test"));
}

TEST_CASE("unknown truth labels give null label metrics") {
    const Config cfg = small_config(3);
    auto p = pipeline::prepare(cfg);
    std::fill(p.test.truth.begin(), p.test.truth.end(), clust::kUnknown);
    const auto r = pipeline::run_training(cfg, p);
    const auto j = pipeline::evaluate(cfg, r.model, p, 4, "test").to_json();
    for (const char* key : {"purity", "ari", "nmi", "accuracy_raw", "accuracy_matched"}) CHECK(j[key].is_null());
    CHECK_FALSE(j["c_index"].is_null());
    CHECK_FALSE(j["silhouette"].is_null());
    CHECK_FALSE(j["logrank_p"].is_null());
}

TEST_CASE("sweep rows agree with standalone evaluation") {
    const Config cfg = small_config(4);
    const auto p = pipeline::prepare(cfg);
    const auto r = pipeline::run_training(cfg, p);
    const auto rows = pipeline::sweep(cfg, r.model, p, 2, 5);
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) {
        const auto ev = pipeline::evaluate(cfg, r.model, p, row.k, cfg.eval_split);
        CHECK(ev.c_index == row.omicscl_c_index);
        CHECK(ev.purity == row.purity);
        CHECK(ev.silhouette.value_or(0.0) == row.silhouette);
    }
}

TEST_CASE("ablation with alpha 0 has zero delta and records both configs") {
    Config cfg = small_config(5);
    cfg.loss.alpha = 0.0;
    const auto rep = pipeline::ablate(cfg);
    CHECK(rep.delta == 0.0);
    const auto j = rep.to_json();
    CHECK(j["with_survival"]["config"]["seed"] == 5);
    CHECK(j["without_survival"]["config"]["alpha"] == 0.0);
}

TEST_CASE("artifacts are byte-identical across runs") {
    const Config cfg = small_config(6);
    const fs::path dir = fs::temp_directory_path() / "omicscl_pipeline_artifacts";
    fs::create_directories(dir);
    std::string first_emb, first_rep;
    for (int run = 0; run < 2; ++run) {
        const auto p = pipeline::prepare(cfg);
        const auto r = pipeline::run_training(cfg, p);
        pipeline::write_embeddings_csv(dir / "emb.csv", cfg, r.model, p);
        pipeline::write_train_report(dir / "rep.jsonl", cfg, r.report);
        if (run == 0) {
            first_emb = slurp(dir / "emb.csv");
            first_rep = slurp(dir / "rep.jsonl");
        }
    }
    CHECK(slurp(dir / "emb.csv") == first_emb);
    CHECK(slurp(dir / "rep.jsonl") == first_rep);
    CHECK(first_emb.rfind("# config=", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("shortest round-trip formatting") {
    CHECK(pipeline::format_double(0.1) == "0.1");
    CHECK(std::stod(pipeline::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
