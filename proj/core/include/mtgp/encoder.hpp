// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// GCN encoder with per-layer token modulation.
//
// Layer l maps H^{l-1} to H^l = ReLU(Â H^{l-1} θ^l), H^0 = X. A token for
// layer l < L scales every row of H^l element-wise before θ^{l+1} is applied;
// since (H ⊙ t) θ = H diag(t) θ, this is computed by scaling the rows of
// θ^{l+1}. A token for the output layer L scales the rows of H^L.

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mtgp/graph.hpp"
#include "mtgp/matrix.hpp"
#include "mtgp/ops.hpp"
#include "mtgp/random.hpp"
#include "mtgp/tape.hpp"

namespace mtgp {

/// θ^1..θ^L; layers[l-1] has shape dims[l-1] x dims[l].
struct EncoderWeights {
    std::vector<Matrix> layers;

    /// Glorot-uniform initialization.
    static EncoderWeights glorot(std::span<const std::size_t> dims, Rng& rng);

    std::size_t num_layers() const { return layers.size(); }
    /// [d, dim_1, ..., dim_L]
    std::vector<std::size_t> dims() const;
    std::size_t parameter_count() const;
    void validate() const;

    friend bool operator==(const EncoderWeights&, const EncoderWeights&) = default;
};

/// One 1 x dim_l vector per layer l = 0..L.
struct TokenSet {
    std::vector<Matrix> tokens;

    static TokenSet ones(std::span<const std::size_t> dims);
    void validate(std::span<const std::size_t> dims) const;
    std::size_t parameter_count() const;

    friend bool operator==(const TokenSet&, const TokenSet&) = default;
};

/// Nonnegative weights α_0..α_L of the per-layer token passes.
struct LayerMix {
    std::vector<double> alpha;

    void validate(std::size_t num_layers) const;
    double total() const;
    friend bool operator==(const LayerMix&, const LayerMix&) = default;
};

/// Constant graph-side operands of a forward pass.
struct GraphInput {
    ad::CsrPtr adjacency;
    ad::CsrPtr features;

    std::size_t num_nodes() const { return adjacency->rows(); }
    std::size_t feature_dim() const { return features->cols(); }
};

GraphInput make_graph_input(const Graph& g);

/// Induced input on the `hops`-hop closure of `targets`. Adjacency entries
/// keep their full-graph values, so output rows of the targets equal the
/// corresponding rows of a full-graph pass bit for bit when hops >= L.
struct ReceptiveField {
    GraphInput input;
    std::vector<NodeId> nodes;        // local row -> global node, ascending
    std::vector<std::size_t> target_rows;  // local row of each target

    /// Local row of a global node in `nodes`. Throws IndexError if absent.
    std::size_t local(NodeId global) const;
};

ReceptiveField receptive_field(const Graph& g, const GraphInput& full, std::span<const NodeId> targets,
                               std::size_t hops);

/// One message-passing layer ReLU(Â H θ) on recorded operands.
ad::Var gcn_layer(ad::Var h, const ad::CsrPtr& adjacency, ad::Var theta);

/// Forward passes of one encoder over one graph. Unmodified layer outputs
/// are computed once and shared by all token passes.
class EncoderPass {
public:
    /// `weights` are θ^1..θ^L recorded on one tape (leaves or constants).
    EncoderPass(const GraphInput& input, std::vector<ad::Var> weights);
    /// Reuses precomputed unmodified outputs H^1..H^L, which must equal what
    /// the weights produce on `input`.
    EncoderPass(const GraphInput& input, std::vector<ad::Var> weights, std::vector<ad::Var> plain_layers);

    std::size_t num_layers() const { return weights_.size(); }
    ad::Tape& tape() const { return *weights_.front().tape(); }

    /// H^L without modification.
    ad::Var plain();
    /// H_t: the encoder output with layer `layer` modified by token t.
    ad::Var token_forward(ad::Var token, std::size_t layer);
    /// Σ_l α_l H_{t_l}; passes with α_l = 0 are skipped.
    ad::Var task_embedding(std::span<const ad::Var> tokens, const LayerMix& mix);

private:
    ad::Var layer_output(std::size_t l);
    ad::Var propagate(std::size_t layer, ad::Var theta);

    GraphInput input_;
    std::vector<ad::Var> weights_;
    std::vector<std::optional<ad::Var>> plain_;
};

/// Unmodified layer outputs H^1..H^L as plain values.
std::vector<Matrix> plain_layer_outputs(const GraphInput& input, const EncoderWeights& weights);

/// Column mean over all rows.
ad::Var readout(ad::Var h);
/// Column mean over the given rows. Throws ValidationError when empty.
ad::Var readout(ad::Var h, std::span<const std::size_t> rows);
/// Row g of the result is the mean of the rows listed in groups[g].
ad::Var segment_readout(ad::Var h, const std::vector<std::vector<std::size_t>>& groups);

}  // namespace mtgp
