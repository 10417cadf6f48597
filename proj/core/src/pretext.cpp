// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/pretext.hpp"

#include <algorithm>
#include <array>

#include "mtgp/encoder.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/ops.hpp"

namespace mtgp {

using ad::Var;

Var dgi_loss(Var h_pos, Var h_neg, Var summary) {
    if (h_pos.rows() != h_neg.rows()) {
        throw DimensionError("dgi_loss: " + std::to_string(h_pos.rows()) + " real rows vs " +
                             std::to_string(h_neg.rows()) + " corrupted rows");
    }
    ad::Tape& tape = *h_pos.tape();
    Var s_t = ad::transpose(summary);
    Var pos = ad::clamp(ad::sigmoid(ad::matmul(h_pos, s_t)), kScoreFloor, 1.0 - kScoreFloor);
    Var neg = ad::clamp(ad::sigmoid(ad::matmul(h_neg, s_t)), kScoreFloor, 1.0 - kScoreFloor);
    Var ones = tape.constant(Matrix(neg.rows(), 1, 1.0));
    Var total = ad::add(ad::sum(ad::log(pos)), ad::sum(ad::log(ad::sub(ones, neg))));
    return ad::scale(total, -1.0 / static_cast<double>(h_pos.rows() + h_neg.rows()));
}

Var graphcl_loss(Var view1, Var view2, double tau) {
    if (!(tau > 0.0)) throw DomainError("graphcl_loss: temperature must be positive");
    const std::size_t n = view1.rows();
    if (view2.rows() != n) throw DimensionError("graphcl_loss: views have different row counts");
    if (n < 2) throw ValidationError("graphcl_loss needs at least two nodes (no negatives)");
    ad::Tape& tape = *view1.tape();
    Var sim = ad::scale(ad::cosine_matrix(view1, view2, kNormFloor), 1.0 / tau);
    std::vector<char> off_diagonal(n * n, 1);
    for (std::size_t i = 0; i < n; ++i) off_diagonal[i * n + i] = 0;
    Var positives = ad::sum(ad::elementwise_mul(sim, tape.constant(Matrix::identity(n))));
    Var denominators = ad::sum(ad::logsumexp_rows(sim, off_diagonal));
    return ad::scale(ad::sub(denominators, positives), 1.0 / static_cast<double>(n));
}

Var lp_loss(std::span<const LinkTuple> tuples, Var subgraph_embeddings, std::span<const NodeId> embedded_nodes,
            double tau) {
    if (!(tau > 0.0)) throw DomainError("lp_loss: temperature must be positive");
    if (tuples.empty()) throw ValidationError("lp_loss needs at least one tuple");
    if (embedded_nodes.size() != subgraph_embeddings.rows()) {
        throw DimensionError("lp_loss: node list does not match embedding rows");
    }
    auto row_of = [&](NodeId v) {
        auto it = std::lower_bound(embedded_nodes.begin(), embedded_nodes.end(), v);
        if (it == embedded_nodes.end() || *it != v) {
            throw ValidationError("lp_loss: no subgraph embedding for node " + std::to_string(v));
        }
        return static_cast<std::size_t>(it - embedded_nodes.begin());
    };
    std::vector<std::size_t> rv, ra, rb;
    for (const LinkTuple& t : tuples) {
        rv.push_back(row_of(t.v));
        ra.push_back(row_of(t.a));
        rb.push_back(row_of(t.b));
    }
    Var normed = ad::row_normalize(subgraph_embeddings, kNormFloor);
    Var hv = ad::gather_rows(normed, rv);
    Var s_a = ad::scale(ad::row_sums(ad::elementwise_mul(hv, ad::gather_rows(normed, ra))), 1.0 / tau);
    Var s_b = ad::scale(ad::row_sums(ad::elementwise_mul(hv, ad::gather_rows(normed, rb))), 1.0 / tau);
    const std::array<Var, 2> pair{s_a, s_b};
    Var lse = ad::logsumexp_rows(ad::concat_cols(pair));
    return ad::sub(ad::sum(lse), ad::sum(s_a));
}

EgoEmbeddings ego_readouts(const Graph& g, Var h, std::span<const LinkTuple> tuples) {
    EgoEmbeddings out;
    for (const LinkTuple& t : tuples) {
        out.nodes.push_back(t.v);
        out.nodes.push_back(t.a);
        out.nodes.push_back(t.b);
    }
    std::sort(out.nodes.begin(), out.nodes.end());
    out.nodes.erase(std::unique(out.nodes.begin(), out.nodes.end()), out.nodes.end());
    std::vector<std::vector<std::size_t>> groups;
    groups.reserve(out.nodes.size());
    for (NodeId v : out.nodes) {
        auto ego = ego_subgraph(g, v);
        groups.emplace_back(ego.begin(), ego.end());
    }
    out.embeddings = segment_readout(h, groups);
    return out;
}

std::string to_string(PretextTask task) {
    switch (task) {
        case PretextTask::Dgi: return "dgi";
        case PretextTask::GraphCl: return "graphcl";
        case PretextTask::LinkPrediction: return "lp";
    }
    return "unknown";
}

PretextTask parse_pretext_task(const std::string& name) {
    if (name == "dgi") return PretextTask::Dgi;
    if (name == "graphcl") return PretextTask::GraphCl;
    if (name == "lp") return PretextTask::LinkPrediction;
    throw ParseError("unknown pretext task '" + name + "' (expected dgi, graphcl or lp)");
}

}  // namespace mtgp
