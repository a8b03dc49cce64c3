#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "omicscl/cluster.hpp"
#include "omicscl/dataio.hpp"
#include "omicscl/encoder.hpp"
#include "omicscl/losses.hpp"
#include "omicscl/trainer.hpp"

namespace omicscl {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Every run is reproducible from this structure alone. Serialized as a flat
// JSON object; unknown keys are rejected.
struct Config {
    std::uint64_t seed = 0;

    // Data: CSVs under data_dir, or a synthetic cohort when data_dir is empty.
    std::string data_dir;
    std::vector<std::string> modalities{"gene_expression", "methylation", "mirna"};
    data::SyntheticSpec synthetic;
    data::SplitSpec split;

    EncoderConfig encoder;
    losses::LossConfig loss;
    train::TrainConfig train;

    // Evaluation.
    int k = 4;
    cluster::Fusion fusion = cluster::Fusion::Concat;
    int kmeans_n_init = 10;
    int kmeans_max_iter = 300;
    double cox_ridge = 1e-4;
    int sweep_k_min = 2;
    int sweep_k_max = 9;
    std::string eval_split = "test";   // train | val | test
    std::string cluster_fit = "train"; // train | split

    // Propagates to the split, synthetic generator and trainer.
    void set_seed(std::uint64_t s);
    void validate() const;

    nlohmann::json to_json() const;
    static Config from_json(const nlohmann::json& j);
};

Config load_config(const std::filesystem::path& path);

}  // namespace omicscl
