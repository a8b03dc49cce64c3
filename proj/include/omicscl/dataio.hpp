#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omicscl/losses.hpp"
#include "omicscl/matrix.hpp"

namespace omicscl::data {

// Row-aligned multi-omics cohort with survival outcome.
struct Cohort {
    std::vector<std::string> patient_ids;
    std::vector<std::string> modality_names;
    std::vector<Matrix> views;
    std::vector<std::vector<std::string>> feature_names;
    std::vector<double> time;
    std::vector<int> event;
    std::vector<std::string> subtype;  // "Unknown" when missing

    std::size_t size() const noexcept { return patient_ids.size(); }
    Cohort subset(std::span<const std::size_t> rows) const;
    losses::BatchSurvival survival() const { return {time, event}; }
    void validate() const;
};

struct ModalityFile {
    std::string name;
    std::filesystem::path path;
};

struct CohortPaths {
    std::vector<ModalityFile> modalities;
    std::filesystem::path clinical;
    std::optional<std::filesystem::path> subtypes;
};

// Parses a clinical status value. alive/0/censored -> 0, dead/deceased/1 -> 1
// (case-insensitive); missing -> nullopt; anything else throws.
std::optional<int> parse_status(std::string_view raw);

// Inner join on patient_id across all files; patients missing survival time,
// status or any omics value are dropped. Rows are ordered by patient_id.
Cohort load_cohort(const CohortPaths& paths);

// Writes <modality>.csv, clinical.csv and subtypes.csv under dir.
CohortPaths write_cohort(const std::filesystem::path& dir, const Cohort& cohort);

// Standard layout produced by write_cohort.
CohortPaths default_paths(const std::filesystem::path& dir, std::span<const std::string> modalities);

// ----------------------------------------------------------- normalization

struct ZScoreParams {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<std::string> fitted_on;  // patient ids of the rows used

    Matrix apply(const Matrix& x) const;
};

// Population mean/std per feature from the given rows only. Features with
// std < 1e-12 are centered and left at unit scale.
ZScoreParams zscore_fit(const Matrix& train, std::span<const std::string> train_ids);

struct TimeScale {
    double scale = 1.0;  // original units per normalized unit
    std::vector<std::string> fitted_on;

    std::vector<double> apply(std::span<const double> t) const;
};

// Scale = interquartile range of the training times (1 if degenerate).
TimeScale normalize_times(std::span<const double> train_time, std::span<const std::string> train_ids);

double quantile(std::vector<double> v, double q);

// ------------------------------------------------------------------- split

struct SplitSpec {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

// Seeded shuffle, then contiguous slices; val/test get floor(n * frac) rows,
// the remainder goes to train.
SplitIndices split(std::size_t n, const SplitSpec& spec);

// --------------------------------------------------------------- synthetic

struct SyntheticSpec {
    std::size_t n_patients = 600;
    std::size_t n_subtypes = 3;
    std::size_t latent_dim = 16;
    std::vector<std::string> modality_names{"gene_expression", "methylation", "mirna"};
    std::vector<std::size_t> feature_dims{200, 150, 60};
    double noise = 1.0;
    std::vector<double> hazard_rates{1.0, 2.0, 4.0};
    double censoring = 0.3;
    std::uint64_t seed = 0;

    void validate() const;
};

// Subtype centers c_k ~ N(0, I); patient latent h = c_k + noise * N(0, I);
// per-modality features x = A_v h + noise * N(0, I) with a fixed random A_v;
// t ~ Exp(rate_k); censored patients get t <- U(0, t) and e = 0.
Cohort generate_synthetic(const SyntheticSpec& spec);

}  // namespace omicscl::data
