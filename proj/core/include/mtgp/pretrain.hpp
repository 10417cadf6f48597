// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Joint multi-task pre-training of the encoder and per-task tokens, and the
// checkpoint that freezes the result.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mtgp/encoder.hpp"
#include "mtgp/graph.hpp"
#include "mtgp/pretext.hpp"

namespace mtgp {

struct PretrainConfig {
    std::vector<PretextTask> tasks{PretextTask::Dgi, PretextTask::GraphCl, PretextTask::LinkPrediction};
    std::vector<double> betas{0.9, 0.9, 0.1};
    LayerMix mix{{1e-4, 1.0}};
    std::vector<std::size_t> hidden{256};
    std::size_t epochs = 300;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    double tau = 0.5;
    double drop_ratio = 0.2;
    std::size_t lp_tuples = 256;
    /// GraphCL anchors per epoch; all nodes when the graph is smaller.
    std::size_t graphcl_batch = 512;
    /// false trains Θ alone with every token fixed at 1.
    bool train_tokens = true;

    std::size_t num_tasks() const { return tasks.size(); }
    void validate() const;
    friend bool operator==(const PretrainConfig&, const PretrainConfig&) = default;
};

struct DatasetFingerprint {
    std::size_t feature_dim = 0;
    std::size_t num_graphs = 0;
    std::size_t total_nodes = 0;

    static DatasetFingerprint of(const Dataset& dataset);
    friend bool operator==(const DatasetFingerprint&, const DatasetFingerprint&) = default;
};

struct EpochLosses {
    double total = 0.0;
    std::vector<double> per_task;
    friend bool operator==(const EpochLosses&, const EpochLosses&) = default;
};

struct Checkpoint {
    static constexpr const char* kFormat = "mtgp-checkpoint";
    static constexpr int kVersion = 1;

    EncoderWeights weights;
    /// One set per configured task, in config order. Empty when trained without tokens.
    std::vector<TokenSet> tokens;
    PretrainConfig config;
    DatasetFingerprint fingerprint;
    std::vector<EpochLosses> history;

    bool has_tokens() const { return !tokens.empty(); }
    std::vector<double> final_losses() const;
    void validate() const;
    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Σ_k β_k · loss_k, accumulated left to right.
double multi_task_loss(std::span<const double> losses, std::span<const double> betas);
ad::Var multi_task_loss(std::span<const ad::Var> losses, std::span<const double> betas);

/// The pre-training graph: the dataset's graphs as one disjoint union.
Graph pretraining_graph(const Dataset& dataset);

/// Per-epoch losses recorded on the tape that holds `weights`.
struct EpochObjective {
    std::vector<ad::Var> per_task;
    ad::Var total;
};
EpochObjective epoch_objective(const Graph& g, const GraphInput& input,
                               std::span<const ad::Var> weights, std::span<const std::vector<ad::Var>> tokens,
                               const PretrainConfig& config, std::size_t epoch);

/// Full-batch Adam on the β-weighted objective. Throws DomainError naming
/// the epoch and per-task losses if any loss turns non-finite.
Checkpoint pretrain(const Dataset& dataset, const PretrainConfig& config);

/// H⟨k⟩ for the checkpoint's k-th token set.
Matrix pretext_embedding(const Checkpoint& cp, const GraphInput& input, std::size_t task_index);

std::string checkpoint_to_json(const Checkpoint& cp);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws CompatibilityError unless the checkpoint was trained on `feature_dim` features.
void check_compatible(const Checkpoint& cp, std::size_t feature_dim);

/// Flat JSON object of PretrainConfig fields; absent keys keep their defaults.
std::string pretrain_config_to_json(const PretrainConfig& config);
PretrainConfig pretrain_config_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mtgp
