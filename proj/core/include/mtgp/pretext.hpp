// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Self-supervised losses evaluated on token-modified embeddings.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "mtgp/graph.hpp"
#include "mtgp/tape.hpp"

namespace mtgp {

/// Discriminator scores are clipped to [kScoreFloor, 1 - kScoreFloor] before the log.
inline constexpr double kScoreFloor = 1e-12;

/// Embedding norms are floored here in the contrastive losses, so an all-zero
/// row has cosine 0 with everything instead of raising.
inline constexpr double kNormFloor = 1e-8;

/// Infomax loss: real rows should score high against the summary vector,
/// corrupted rows low. Score is sigmoid(h · summary).
/// -(Σ_a log s_a + Σ_b log(1 - s_b)) / (|A| + |B|).
ad::Var dgi_loss(ad::Var h_pos, ad::Var h_neg, ad::Var summary);

/// Node-level two-view NT-Xent. Row v of each view is a positive pair; rows
/// u != v of the second view are the negatives of anchor v.
/// Requires at least two rows.
ad::Var graphcl_loss(ad::Var view1, ad::Var view2, double tau);

/// Two-way softmax link-prediction loss summed over tuples.
/// `subgraph_embeddings` row i is h_{S_u} for node `embedded_nodes[i]`
/// (ascending). Throws ValidationError for a tuple node without a row.
ad::Var lp_loss(std::span<const LinkTuple> tuples, ad::Var subgraph_embeddings,
                std::span<const NodeId> embedded_nodes, double tau);

/// Ego-subgraph readouts for every node referenced by `tuples`.
struct EgoEmbeddings {
    ad::Var embeddings;
    std::vector<NodeId> nodes;
};
EgoEmbeddings ego_readouts(const Graph& g, ad::Var h, std::span<const LinkTuple> tuples);

enum class PretextTask { Dgi, GraphCl, LinkPrediction };

std::string to_string(PretextTask task);
PretextTask parse_pretext_task(const std::string& name);

}  // namespace mtgp
