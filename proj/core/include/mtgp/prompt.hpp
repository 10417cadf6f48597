// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Downstream adaptation with composed and open prompts over a frozen
// checkpoint, prototype classification and prompt tuning.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtgp/encoder.hpp"
#include "mtgp/fewshot.hpp"
#include "mtgp/pretrain.hpp"

namespace mtgp {

/// Which prompt components take part in adaptation.
///
/// use_tokens without use_composed uses the frozen mean of the K task
/// embeddings in place of the composed branch. Without tokens and without
/// open prompts the plain encoder output is used.
struct PromptVariant {
    bool use_tokens = true;
    bool use_composed = true;
    bool use_open = true;

    /// "1".."5" or "full".
    static PromptVariant parse(const std::string& name);
    std::string name() const;
    void validate() const;
    friend bool operator==(const PromptVariant&, const PromptVariant&) = default;
};

struct PromptState {
    static constexpr const char* kFormat = "mtgp-prompt";
    static constexpr int kVersion = 1;

    std::vector<Matrix> gamma;  // per layer, 1 x K
    std::vector<Matrix> open;   // per layer, 1 x dim_l
    Matrix delta_com{1, 1, 0.5};
    Matrix delta_op{1, 1, 0.5};

    /// Γ = 1/K, open prompts = 1, Δ = (0.5, 0.5).
    static PromptState initial(std::span<const std::size_t> dims, std::size_t num_tasks);
    /// Sizes of Γ, open prompts and Δ together.
    std::size_t parameter_count() const;
    void validate(std::span<const std::size_t> dims, std::size_t num_tasks) const;
    friend bool operator==(const PromptState&, const PromptState&) = default;
};

/// Entries the variant actually tunes.
std::size_t tunable_parameter_count(const PromptState& state, const PromptVariant& variant);

std::string prompt_state_to_json(const PromptState& state);
PromptState prompt_state_from_json(const std::string& text);

/// Prompt parameters recorded on a tape.
struct PromptVars {
    std::vector<ad::Var> gamma;
    std::vector<ad::Var> open;
    ad::Var delta_com;
    ad::Var delta_op;
    /// The subset the variant tunes, in a fixed order.
    std::vector<ad::Var> tuned;
};

/// Leaves for the parameters the variant tunes, constants for the rest.
PromptVars record_prompt(ad::Tape& tape, const PromptState& state, const PromptVariant& variant);

/// p_com,l = Σ_k γ_{l,k} t⟨k⟩,l as a 1 x dim_l row.
ad::Var compose_prompt(std::span<const TokenSet> tokens, ad::Var gamma_l, std::size_t layer);

/// H̃ = δ_com H_com + δ_op H_op over the branches the variant enables.
/// `token_mean`, if given, is the precomputed frozen token branch.
ad::Var dual_forward(EncoderPass& pass, std::span<const TokenSet> tokens, const PromptVars& prompt,
                     const LayerMix& mix, const PromptVariant& variant,
                     std::optional<ad::Var> token_mean = std::nullopt);

/// Mean over k of H⟨k⟩ with frozen tokens.
ad::Var token_mean_embedding(EncoderPass& pass, std::span<const TokenSet> tokens, const LayerMix& mix);

/// Row c is the mean of the embedding rows whose class index is c.
/// Throws ValidationError if a class has no row.
ad::Var prototype_embeddings(ad::Var embeddings, std::span<const std::size_t> class_index, std::size_t num_classes);

/// Σ_i -log softmax_c(cos(h_i, p_c) / τ)[y_i].
/// Zero-norm rows raise DomainError unless `min_norm` > 0 floors the norms;
/// prompt_tune floors at kNormFloor.
ad::Var prompt_tuning_loss(ad::Var embeddings, ad::Var prototypes, std::span<const std::size_t> class_index,
                           double tau, double min_norm = 0.0);

struct Classification {
    std::vector<std::size_t> predicted;  // class index per row
    Matrix distribution;                 // rows x classes, each row sums to 1
};

/// Softmax over cos / τ; ties go to the smallest class index. A zero row
/// scores 0 against every prototype.
Classification classify(const Matrix& embeddings, const Matrix& prototypes, double tau);

/// A downstream dataset prepared once for many tasks.
struct DownstreamData {
    TaskKind kind = TaskKind::Node;
    Graph graph;
    GraphInput input;
    /// Node ids making up each instance (one node, or all nodes of a graph).
    std::vector<std::vector<NodeId>> instances;

    static DownstreamData build(const Dataset& dataset, TaskKind kind);
};

struct TuneConfig {
    std::size_t steps = 200;
    double lr = 1e-2;
    double tau = 0.5;
    /// Layer mix for prompted passes; the checkpoint's when unset.
    std::optional<LayerMix> mix;
    PromptVariant variant;
};

struct TuneResult {
    PromptState state;
    std::vector<double> losses;  // support loss before each step
};

/// Adam on the support loss. Only the prompt changes; the checkpoint is read-only.
TuneResult prompt_tune(const Checkpoint& cp, const DownstreamData& data, const FewShotTask& task,
                       const TuneConfig& config);

struct TaskEvaluation {
    double accuracy = 0.0;
    std::vector<ClassId> predictions;  // per query instance
};

/// Prototypes from the support set, predictions for the query set.
TaskEvaluation evaluate_task(const Checkpoint& cp, const DownstreamData& data, const FewShotTask& task,
                             const PromptState& state, const TuneConfig& config);

}  // namespace mtgp
