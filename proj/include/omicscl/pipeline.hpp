#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "omicscl/cluster.hpp"
#include "omicscl/config.hpp"
#include "omicscl/dataio.hpp"
#include "omicscl/survmetrics.hpp"
#include "omicscl/trainer.hpp"

namespace omicscl::pipeline {

// One split after train-fitted normalization.
struct Split {
    std::string name;
    std::vector<std::size_t> rows;  // into Prepared::cohort
    std::vector<std::string> patient_ids;
    train::SplitData data;          // normalized views, normalized times
    std::vector<double> raw_time;   // original units
    std::vector<int> truth;         // encoded subtype, clust::kUnknown when missing
};

struct Prepared {
    data::Cohort cohort;
    std::vector<data::ZScoreParams> zscore;  // per modality
    data::TimeScale time_scale;
    std::vector<std::string> subtype_classes;
    Split train, val, test;

    const Split& split(const std::string& name) const;
};

// Loads or generates the cohort, splits it and fits every normalization on
// the training rows only.
Prepared prepare(const Config& cfg);
Prepared prepare(const Config& cfg, data::Cohort cohort);

train::ValidationOptions validation_options(const Config& cfg);

train::TrainResult run_training(const Config& cfg, const Prepared& prep,
                                const std::function<void(const train::EpochRecord&)>& on_epoch = {});

// Fused embeddings of one split.
Matrix fused_embeddings(const Config& cfg, const Model& model, const Split& split);

struct Clustering {
    cluster::KMeansModel kmeans;  // fitted on the reference split
    std::vector<int> labels;      // evaluation split
    cluster::ClusterRiskMap risk_map;
    std::vector<double> risk;     // evaluation split
};

// KMeans on the reference split (train, or the evaluation split itself when
// cluster_fit = "split"), risks from the reference split's survival.
Clustering cluster_split(const Config& cfg, const Matrix& reference, const Split& reference_split,
                         const Matrix& target, int k);

struct EvalReport {
    std::string split;
    int k = 0;
    double c_index = 0.0;
    std::optional<surv::LogRankResult> logrank;
    std::optional<double> silhouette;
    std::optional<double> purity, ari, nmi, accuracy_raw, accuracy_matched;
    std::vector<std::size_t> cluster_sizes;
    std::string risk_statistic;
    std::vector<surv::KMCurve> km_curves;  // per cluster, original time units
    std::vector<int> labels;

    nlohmann::json to_json() const;
};

EvalReport evaluate(const Config& cfg, const Model& model, const Prepared& prep, int k, const std::string& split);
EvalReport evaluate(const Config& cfg, const Matrix& target, const Prepared& prep, const Matrix& reference, int k,
                    const std::string& split);

struct AblationRun {
    double alpha = 0.0;
    double test_c_index = 0.0;
    double best_val_c_index = 0.0;
    int best_epoch = -1;
    int epochs_run = 0;
    nlohmann::json config;
};

struct AblationReport {
    AblationRun with_survival, without_survival;
    double delta = 0.0;

    nlohmann::json to_json() const;
};

AblationReport ablate(const Config& cfg);

struct SweepRow {
    int k = 0;
    double omicscl_c_index = 0.0;
    double cox_embeddings_c_index = 0.0;
    double cox_onehot_c_index = 0.0;
    std::optional<double> purity;
    double silhouette = 0.0;
};

std::vector<SweepRow> sweep(const Config& cfg, const Model& model, const Prepared& prep, int k_min, int k_max);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);

// ------------------------------------------------------------- artifacts

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_embeddings_csv(const std::filesystem::path& path, const Config& cfg, const Model& model,
                          const Prepared& prep);
void write_train_report(const std::filesystem::path& path, const Config& cfg, const train::TrainReport& report);
void write_km_csv(const std::filesystem::path& path, const Config& cfg, const EvalReport& report);
void write_clusters_csv(const std::filesystem::path& path, const Config& cfg, const Split& split,
                        const EvalReport& report);
void write_sweep_csv(const std::filesystem::path& path, const Config& cfg, const std::vector<SweepRow>& rows);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace omicscl::pipeline
