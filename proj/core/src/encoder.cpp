// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "mtgp/errors.hpp"

namespace mtgp {

using ad::Var;

EncoderWeights EncoderWeights::glorot(std::span<const std::size_t> dims, Rng& rng) {
    if (dims.size() < 2) throw ValidationError("encoder needs at least one layer");
    EncoderWeights w;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l - 1] + dims[l]));
        Matrix theta(dims[l - 1], dims[l]);
        for (double& x : theta.values()) x = rng.uniform(-limit, limit);
        w.layers.push_back(std::move(theta));
    }
    return w;
}

std::vector<std::size_t> EncoderWeights::dims() const {
    std::vector<std::size_t> d;
    if (layers.empty()) return d;
    d.push_back(layers.front().rows());
    for (const Matrix& m : layers) d.push_back(m.cols());
    return d;
}

std::size_t EncoderWeights::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix& m : layers) n += m.size();
    return n;
}

void EncoderWeights::validate() const {
    if (layers.empty()) throw ValidationError("encoder needs at least one layer");
    for (std::size_t l = 1; l < layers.size(); ++l) {
        if (layers[l].rows() != layers[l - 1].cols()) {
            throw ValidationError("encoder layer " + std::to_string(l + 1) + " expects input dim " +
                                  std::to_string(layers[l].rows()) + ", previous layer emits " +
                                  std::to_string(layers[l - 1].cols()));
        }
    }
}

TokenSet TokenSet::ones(std::span<const std::size_t> dims) {
    TokenSet t;
    for (std::size_t d : dims) t.tokens.emplace_back(1, d, 1.0);
    return t;
}

void TokenSet::validate(std::span<const std::size_t> dims) const {
    if (tokens.size() != dims.size()) {
        throw ValidationError("token set has " + std::to_string(tokens.size()) + " vectors, encoder needs " +
                              std::to_string(dims.size()));
    }
    for (std::size_t l = 0; l < dims.size(); ++l) {
        if (tokens[l].rows() != 1 || tokens[l].cols() != dims[l]) {
            throw ValidationError("token for layer " + std::to_string(l) + " has shape " +
                                  tokens[l].shape_string() + ", layer dim is " + std::to_string(dims[l]));
        }
    }
}

std::size_t TokenSet::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix& m : tokens) n += m.size();
    return n;
}

void LayerMix::validate(std::size_t num_layers) const {
    if (alpha.size() != num_layers + 1) {
        throw ValidationError("layer mix needs " + std::to_string(num_layers + 1) + " weights, got " +
                              std::to_string(alpha.size()));
    }
    bool positive = false;
    for (double a : alpha) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("layer mix weights must be finite and >= 0");
        positive = positive || a > 0.0;
    }
    if (!positive) throw ValidationError("layer mix needs at least one positive weight");
}

double LayerMix::total() const {
    double s = 0.0;
    for (double a : alpha) s += a;
    return s;
}

GraphInput make_graph_input(const Graph& g) {
    return GraphInput{std::make_shared<const CsrMatrix>(normalize_adjacency(g)),
                      std::make_shared<const CsrMatrix>(CsrMatrix::from_dense(g.features()))};
}

std::size_t ReceptiveField::local(NodeId global) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), global);
    if (it == nodes.end() || *it != global) {
        throw IndexError("node " + std::to_string(global) + " outside the receptive field");
    }
    return static_cast<std::size_t>(it - nodes.begin());
}

ReceptiveField receptive_field(const Graph& g, const GraphInput& full, std::span<const NodeId> targets,
                               std::size_t hops) {
    std::vector<char> in(g.num_nodes(), 0);
    std::vector<NodeId> frontier;
    for (NodeId t : targets) {
        if (t >= g.num_nodes()) throw IndexError("target node " + std::to_string(t) + " out of range");
        if (!in[t]) {
            in[t] = 1;
            frontier.push_back(t);
        }
    }
    for (std::size_t h = 0; h < hops && !frontier.empty(); ++h) {
        std::vector<NodeId> next;
        for (NodeId v : frontier) {
            for (NodeId u : g.neighbors(v)) {
                if (!in[u]) {
                    in[u] = 1;
                    next.push_back(u);
                }
            }
        }
        frontier = std::move(next);
    }
    ReceptiveField rf;
    std::vector<std::size_t> rows;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        if (in[v]) {
            rf.nodes.push_back(static_cast<NodeId>(v));
            rows.push_back(v);
        }
    }
    std::vector<std::size_t> all_cols(full.feature_dim());
    for (std::size_t c = 0; c < all_cols.size(); ++c) all_cols[c] = c;
    rf.input.adjacency = std::make_shared<const CsrMatrix>(full.adjacency->select(rows, rows));
    rf.input.features = std::make_shared<const CsrMatrix>(full.features->select(rows, all_cols));
    for (NodeId t : targets) rf.target_rows.push_back(rf.local(t));
    return rf;
}

Var gcn_layer(Var h, const ad::CsrPtr& adjacency, Var theta) {
    return ad::relu(ad::spmm(adjacency, ad::matmul(h, theta)));
}

EncoderPass::EncoderPass(const GraphInput& input, std::vector<Var> weights)
    : input_(input), weights_(std::move(weights)), plain_(weights_.size()) {
    if (weights_.empty()) throw ValidationError("encoder needs at least one layer");
    if (weights_.front().rows() != input_.feature_dim()) {
        throw DimensionError("encoder expects feature dim " + std::to_string(weights_.front().rows()) +
                             ", graph has " + std::to_string(input_.feature_dim()));
    }
}

EncoderPass::EncoderPass(const GraphInput& input, std::vector<Var> weights, std::vector<Var> plain_layers)
    : EncoderPass(input, std::move(weights)) {
    if (plain_layers.size() != weights_.size()) throw DimensionError("plain layer outputs do not match depth");
    for (std::size_t l = 0; l < plain_layers.size(); ++l) plain_[l] = plain_layers[l];
}

Var EncoderPass::propagate(std::size_t layer, Var theta) {
    // layer is 1-based; its input is X for layer 1 and H^{layer-1} otherwise.
    Var z = layer == 1 ? ad::spmm(input_.features, theta) : ad::matmul(layer_output(layer - 1), theta);
    return ad::relu(ad::spmm(input_.adjacency, z));
}

Var EncoderPass::layer_output(std::size_t l) {
    auto& slot = plain_[l - 1];
    if (!slot) slot = propagate(l, weights_[l - 1]);
    return *slot;
}

Var EncoderPass::plain() { return layer_output(num_layers()); }

Var EncoderPass::token_forward(Var token, std::size_t layer) {
    const std::size_t depth = num_layers();
    if (layer > depth) throw DimensionError("token layer " + std::to_string(layer) + " beyond encoder depth");
    if (layer == depth) {
        if (token.cols() != weights_.back().cols()) {
            throw DimensionError("output token has dim " + std::to_string(token.cols()) + ", layer dim is " +
                                 std::to_string(weights_.back().cols()));
        }
        return ad::rowwise_scale(plain(), token);
    }
    const Var& next = weights_[layer];
    if (token.rows() != 1 || token.cols() != next.rows()) {
        throw DimensionError("token for layer " + std::to_string(layer) + " has dim " + std::to_string(token.cols()) +
                             ", layer dim is " + std::to_string(next.rows()));
    }
    Var h = layer == 0 ? ad::spmm_scaled(input_.features, token, next)
                       : ad::matmul(layer_output(layer), ad::scale_rows(next, token));
    h = ad::relu(ad::spmm(input_.adjacency, h));
    for (std::size_t l = layer + 2; l <= depth; ++l) h = gcn_layer(h, input_.adjacency, weights_[l - 1]);
    return h;
}

Var EncoderPass::task_embedding(std::span<const Var> tokens, const LayerMix& mix) {
    mix.validate(num_layers());
    if (tokens.size() != num_layers() + 1) throw DimensionError("task embedding needs one token per layer");
    std::optional<Var> acc;
    for (std::size_t l = 0; l < tokens.size(); ++l) {
        if (mix.alpha[l] == 0.0) continue;
        Var term = ad::scale(token_forward(tokens[l], l), mix.alpha[l]);
        acc = acc ? ad::add(*acc, term) : term;
    }
    return *acc;
}

std::vector<Matrix> plain_layer_outputs(const GraphInput& input, const EncoderWeights& weights) {
    ad::Tape tape;
    std::vector<Var> w;
    for (const Matrix& m : weights.layers) w.push_back(tape.constant(m));
    std::vector<Matrix> out;
    Var h;
    for (std::size_t l = 1; l <= weights.num_layers(); ++l) {
        Var z = l == 1 ? ad::spmm(input.features, w[0]) : ad::matmul(h, w[l - 1]);
        h = ad::relu(ad::spmm(input.adjacency, z));
        out.push_back(h.value());
    }
    return out;
}

Var readout(Var h) { return ad::mean_rows(h); }

Var readout(Var h, std::span<const std::size_t> rows) {
    if (rows.empty()) throw ValidationError("readout over an empty node subset");
    return ad::mean_rows(ad::gather_rows(h, rows));
}

Var segment_readout(Var h, const std::vector<std::vector<std::size_t>>& groups) {
    auto pool = std::make_shared<const CsrMatrix>(CsrMatrix::row_means(h.rows(), groups));
    return ad::spmm(pool, h);
}

}  // namespace mtgp
