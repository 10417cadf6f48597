// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/audit.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <memory>
#include <numeric>

#include "mtgp/encoder.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/ops.hpp"
#include "mtgp/optim.hpp"
#include "mtgp/pretext.hpp"
#include "mtgp/prompt.hpp"
#include "mtgp/random.hpp"

namespace mtgp {

using ad::Var;

namespace {

struct Case {
    ad::LossBuilder loss;
    std::vector<Matrix> params;
};

using CaseFactory = std::function<Case(Rng&, std::size_t trial)>;

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (double& x : m.values()) x = rng.uniform(lo, hi);
    return m;
}

/// Sum of the entries of `out` weighted by a fixed random matrix.
Var probe(Var out, const Matrix& weights) {
    return ad::sum(ad::elementwise_mul(out, out.tape()->constant(weights)));
}

Case unary_case(Rng& rng, std::function<Var(Var)> op, double lo = -1.0, double hi = 1.0) {
    Matrix w = random_matrix(rng, 5, 6);
    return {[op, w](ad::Tape&, std::span<const Var> p) { return probe(op(p[0]), w); },
            {random_matrix(rng, 5, 6, lo, hi)}};
}

Case binary_case(Rng& rng, std::function<Var(Var, Var)> op, std::size_t r2, std::size_t c2, std::size_t ro,
                 std::size_t co) {
    Matrix w = random_matrix(rng, ro, co);
    return {[op, w](ad::Tape&, std::span<const Var> p) { return probe(op(p[0], p[1]), w); },
            {random_matrix(rng, 5, 6), random_matrix(rng, r2, c2)}};
}

ad::CsrPtr random_sparse(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m = random_matrix(rng, r, c);
    for (double& x : m.values()) {
        if (rng.uniform01() < 0.4) x = 0.0;
    }
    return std::make_shared<const CsrMatrix>(CsrMatrix::from_dense(m));
}

/// Connected graph on six nodes: a path plus random chords.
Graph random_graph(Rng& rng, std::size_t feature_dim) {
    constexpr std::size_t n = 6;
    std::vector<Edge> edges;
    for (NodeId v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 2; v < n; ++v) {
            if (rng.uniform01() < 0.3) edges.emplace_back(u, v);
        }
    }
    return Graph(n, std::move(edges), random_matrix(rng, n, feature_dim, 0.1, 1.0));
}

struct Model {
    Graph graph;
    GraphInput input;
    std::vector<std::size_t> dims;
    LayerMix mix;
};

Model random_model(Rng& rng, std::size_t trial) {
    Model m;
    m.graph = random_graph(rng, 4);
    m.input = make_graph_input(m.graph);
    if (trial % 2 == 0) {
        m.dims = {4, 5};
        m.mix = LayerMix{{0.3, 1.0}};
    } else {
        m.dims = {4, 5, 3};
        m.mix = LayerMix{{0.3, 0.5, 1.0}};
    }
    return m;
}

/// θ^1..θ^L followed by one token per layer for each of `k` tasks.
/// `gain` shrinks θ where discriminator scores would otherwise saturate.
std::vector<Matrix> model_params(Rng& rng, const Model& m, std::size_t k, double gain = 1.0) {
    std::vector<Matrix> p;
    for (std::size_t l = 1; l < m.dims.size(); ++l) {
        p.push_back(random_matrix(rng, m.dims[l - 1], m.dims[l], -0.3 * gain, gain));
    }
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t d : m.dims) p.push_back(random_matrix(rng, 1, d, 0.5, 1.5));
    }
    return p;
}

struct Unpacked {
    std::vector<Var> theta;
    std::vector<std::vector<Var>> tokens;
};

Unpacked unpack(std::span<const Var> p, std::size_t layers, std::size_t k) {
    Unpacked u;
    u.theta.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(layers));
    for (std::size_t t = 0; t < k; ++t) {
        auto first = p.begin() + static_cast<std::ptrdiff_t>(layers + t * (layers + 1));
        u.tokens.emplace_back(first, first + static_cast<std::ptrdiff_t>(layers + 1));
    }
    return u;
}

Case dgi_case(Rng& rng, std::size_t trial) {
    Model m = random_model(rng, trial);
    std::vector<std::size_t> order(m.graph.num_nodes());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    GraphInput neg{m.input.adjacency, std::make_shared<const CsrMatrix>(m.input.features->permute_rows(order))};
    const std::size_t layers = m.dims.size() - 1;
    auto params = model_params(rng, m, 1, 0.3);
    return {[m, neg, layers](ad::Tape&, std::span<const Var> p) {
                Unpacked u = unpack(p, layers, 1);
                EncoderPass pos_pass(m.input, u.theta);
                EncoderPass neg_pass(neg, u.theta);
                Var h_pos = pos_pass.task_embedding(u.tokens[0], m.mix);
                Var h_neg = neg_pass.task_embedding(u.tokens[0], m.mix);
                return dgi_loss(h_pos, h_neg, readout(h_pos));
            },
            params};
}

Case graphcl_case(Rng& rng, std::size_t trial) {
    Model m = random_model(rng, trial);
    Graph g1 = drop_edges(m.graph, 0.2, rng);
    Graph g2 = drop_edges(m.graph, 0.2, rng);
    GraphInput v1{std::make_shared<const CsrMatrix>(normalize_adjacency(g1)), m.input.features};
    GraphInput v2{std::make_shared<const CsrMatrix>(normalize_adjacency(g2)), m.input.features};
    const std::size_t layers = m.dims.size() - 1;
    auto params = model_params(rng, m, 1);
    return {[m, v1, v2, layers](ad::Tape&, std::span<const Var> p) {
                Unpacked u = unpack(p, layers, 1);
                EncoderPass p1(v1, u.theta);
                EncoderPass p2(v2, u.theta);
                return graphcl_loss(p1.task_embedding(u.tokens[0], m.mix), p2.task_embedding(u.tokens[0], m.mix), 0.5);
            },
            params};
}

Case lp_case(Rng& rng, std::size_t trial) {
    Model m = random_model(rng, trial);
    auto tuples = sample_lp_tuples(m.graph, 5, rng);
    const std::size_t layers = m.dims.size() - 1;
    auto params = model_params(rng, m, 1);
    return {[m, tuples, layers](ad::Tape&, std::span<const Var> p) {
                Unpacked u = unpack(p, layers, 1);
                EncoderPass pass(m.input, u.theta);
                EgoEmbeddings ego = ego_readouts(m.graph, pass.task_embedding(u.tokens[0], m.mix), tuples);
                return lp_loss(tuples, ego.embeddings, ego.nodes, 0.5);
            },
            params};
}

Case multitask_case(Rng& rng, std::size_t trial) {
    Model m = random_model(rng, trial);
    auto tuples = sample_lp_tuples(m.graph, 4, rng);
    std::vector<std::size_t> order(m.graph.num_nodes());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    GraphInput neg{m.input.adjacency, std::make_shared<const CsrMatrix>(m.input.features->permute_rows(order))};
    GraphInput view{std::make_shared<const CsrMatrix>(normalize_adjacency(drop_edges(m.graph, 0.2, rng))),
                    m.input.features};
    const std::size_t layers = m.dims.size() - 1;
    auto params = model_params(rng, m, 3, 0.3);
    return {[m, neg, view, tuples, layers](ad::Tape&, std::span<const Var> p) {
                Unpacked u = unpack(p, layers, 3);
                EncoderPass base(m.input, u.theta);
                EncoderPass neg_pass(neg, u.theta);
                EncoderPass view_pass(view, u.theta);
                Var h0 = base.task_embedding(u.tokens[0], m.mix);
                Var l0 = dgi_loss(h0, neg_pass.task_embedding(u.tokens[0], m.mix), readout(h0));
                Var l1 = graphcl_loss(base.task_embedding(u.tokens[1], m.mix),
                                      view_pass.task_embedding(u.tokens[1], m.mix), 0.5);
                EgoEmbeddings ego = ego_readouts(m.graph, base.task_embedding(u.tokens[2], m.mix), tuples);
                Var l2 = lp_loss(tuples, ego.embeddings, ego.nodes, 0.5);
                const std::array<Var, 3> losses{l0, l1, l2};
                const std::array<double, 3> betas{0.9, 0.9, 0.1};
                Var total = ad::scale(losses[0], betas[0]);
                for (std::size_t k = 1; k < 3; ++k) total = ad::add(total, ad::scale(losses[k], betas[k]));
                return total;
            },
            params};
}

/// Prompt loss with Θ and tokens frozen; parameters are Γ, open prompts, Δ.
Case prompt_case(Rng& rng, std::size_t trial, bool graph_level) {
    Model m = random_model(rng, trial);
    const std::size_t layers = m.dims.size() - 1;
    constexpr std::size_t k = 3;
    auto frozen = model_params(rng, m, k);
    EncoderWeights weights;
    std::vector<TokenSet> tokens(k);
    for (std::size_t l = 0; l < layers; ++l) weights.layers.push_back(frozen[l]);
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t l = 0; l <= layers; ++l) tokens[t].tokens.push_back(frozen[layers + t * (layers + 1) + l]);
    }
    std::vector<Matrix> params;
    for (std::size_t l = 0; l <= layers; ++l) params.push_back(random_matrix(rng, 1, k, 0.1, 0.6));
    for (std::size_t d : m.dims) params.push_back(random_matrix(rng, 1, d, 0.5, 1.5));
    params.push_back(random_matrix(rng, 1, 1, 0.3, 0.7));
    params.push_back(random_matrix(rng, 1, 1, 0.3, 0.7));
    // Node level: 6 instances in 2 classes. Graph level: node groups as instances.
    std::vector<std::vector<std::size_t>> groups;
    if (graph_level) {
        groups = {{0, 1}, {2, 3, 4}, {3, 5}, {0, 5}};
    } else {
        for (std::size_t v = 0; v < 6; ++v) groups.push_back({v});
    }
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < groups.size(); ++i) labels.push_back(i % 2);
    return {[m, weights, tokens, layers, groups, labels](ad::Tape& tape, std::span<const Var> p) {
                std::vector<Var> theta;
                for (const Matrix& w : weights.layers) theta.push_back(tape.constant(w));
                EncoderPass pass(m.input, theta);
                PromptVars vars;
                vars.gamma.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(layers + 1));
                vars.open.assign(p.begin() + static_cast<std::ptrdiff_t>(layers + 1),
                                 p.begin() + static_cast<std::ptrdiff_t>(2 * (layers + 1)));
                vars.delta_com = p[2 * (layers + 1)];
                vars.delta_op = p[2 * (layers + 1) + 1];
                Var h = dual_forward(pass, tokens, vars, m.mix, PromptVariant{});
                Var emb = segment_readout(h, groups);
                return prompt_tuning_loss(emb, prototype_embeddings(emb, labels, 2), labels, 0.5);
            },
            params};
}

std::vector<std::pair<std::string, CaseFactory>> cases() {
    std::vector<std::pair<std::string, CaseFactory>> c;
    auto add = [&c](std::string name, CaseFactory f) { c.emplace_back(std::move(name), std::move(f)); };
    add("matmul", [](Rng& r, std::size_t) { return binary_case(r, ad::matmul, 6, 4, 5, 4); });
    add("spmm", [](Rng& r, std::size_t) {
        auto a = random_sparse(r, 4, 5);
        Matrix w = random_matrix(r, 4, 6);
        return Case{[a, w](ad::Tape&, std::span<const Var> p) { return probe(ad::spmm(a, p[0]), w); },
                    {random_matrix(r, 5, 6)}};
    });
    add("spmm_scaled", [](Rng& r, std::size_t) {
        auto x = random_sparse(r, 4, 5);
        Matrix w = random_matrix(r, 4, 3);
        return Case{[x, w](ad::Tape&, std::span<const Var> p) { return probe(ad::spmm_scaled(x, p[0], p[1]), w); },
                    {random_matrix(r, 1, 5), random_matrix(r, 5, 3)}};
    });
    add("add", [](Rng& r, std::size_t) { return binary_case(r, ad::add, 5, 6, 5, 6); });
    add("sub", [](Rng& r, std::size_t) { return binary_case(r, ad::sub, 5, 6, 5, 6); });
    add("elementwise_mul", [](Rng& r, std::size_t) { return binary_case(r, ad::elementwise_mul, 5, 6, 5, 6); });
    add("rowwise_scale", [](Rng& r, std::size_t) { return binary_case(r, ad::rowwise_scale, 1, 6, 5, 6); });
    add("scale_rows", [](Rng& r, std::size_t) { return binary_case(r, ad::scale_rows, 1, 5, 5, 6); });
    add("scalar_mul", [](Rng& r, std::size_t) {
        return binary_case(r, [](Var a, Var s) { return ad::scalar_mul(s, a); }, 1, 1, 5, 6);
    });
    add("scale", [](Rng& r, std::size_t) { return unary_case(r, [](Var a) { return ad::scale(a, -1.7); }); });
    add("relu", [](Rng& r, std::size_t) { return unary_case(r, ad::relu); });
    add("sigmoid", [](Rng& r, std::size_t) { return unary_case(r, ad::sigmoid, -3.0, 3.0); });
    add("exp", [](Rng& r, std::size_t) { return unary_case(r, ad::exp); });
    add("log", [](Rng& r, std::size_t) { return unary_case(r, ad::log, 0.2, 2.0); });
    add("clamp", [](Rng& r, std::size_t) { return unary_case(r, [](Var a) { return ad::clamp(a, -0.5, 0.5); }); });
    add("mean_rows", [](Rng& r, std::size_t) {
        Matrix w = random_matrix(r, 1, 6);
        return Case{[w](ad::Tape&, std::span<const Var> p) { return probe(ad::mean_rows(p[0]), w); },
                    {random_matrix(r, 5, 6)}};
    });
    add("sum", [](Rng& r, std::size_t) {
        return Case{[](ad::Tape&, std::span<const Var> p) { return ad::sum(ad::elementwise_mul(p[0], p[0])); },
                    {random_matrix(r, 5, 6)}};
    });
    add("row_sums", [](Rng& r, std::size_t) {
        Matrix w = random_matrix(r, 5, 1);
        return Case{[w](ad::Tape&, std::span<const Var> p) { return probe(ad::row_sums(p[0]), w); },
                    {random_matrix(r, 5, 6)}};
    });
    add("cosine_sim", [](Rng& r, std::size_t) {
        return Case{[](ad::Tape&, std::span<const Var> p) { return ad::cosine_sim(p[0], p[1]); },
                    {random_matrix(r, 1, 6), random_matrix(r, 1, 6)}};
    });
    add("row_normalize", [](Rng& r, std::size_t) { return unary_case(r, [](Var a) { return ad::row_normalize(a); }); });
    add("row_normalize_floor", [](Rng& r, std::size_t) {
        return unary_case(r, [](Var a) { return ad::row_normalize(a, 1.2); });
    });
    add("transpose", [](Rng& r, std::size_t) {
        Matrix w = random_matrix(r, 6, 5);
        return Case{[w](ad::Tape&, std::span<const Var> p) { return probe(ad::transpose(p[0]), w); },
                    {random_matrix(r, 5, 6)}};
    });
    add("concat_rows", [](Rng& r, std::size_t) {
        return binary_case(
            r, [](Var a, Var b) { return ad::concat_rows(std::array<Var, 2>{a, b}); }, 2, 6, 7, 6);
    });
    add("concat_cols", [](Rng& r, std::size_t) {
        return binary_case(
            r, [](Var a, Var b) { return ad::concat_cols(std::array<Var, 2>{a, b}); }, 5, 2, 5, 8);
    });
    add("gather_rows", [](Rng& r, std::size_t) {
        return unary_case(r, [](Var a) {
            const std::array<std::size_t, 5> rows{4, 0, 0, 2, 1};
            return ad::gather_rows(a, rows);
        });
    });
    add("logsumexp_rows", [](Rng& r, std::size_t) {
        std::vector<char> keep(30, 1);
        for (std::size_t i = 0; i < 5; ++i) keep[i * 6 + i] = 0;
        Matrix w = random_matrix(r, 5, 1);
        return Case{[keep, w](ad::Tape&, std::span<const Var> p) { return probe(ad::logsumexp_rows(p[0], keep), w); },
                    {random_matrix(r, 5, 6, -2.0, 2.0)}};
    });
    add("cosine_matrix", [](Rng& r, std::size_t) { return binary_case(r, [](Var a, Var b) { return ad::cosine_matrix(a, b); }, 4, 6, 5, 4); });
    add("task_embedding", [](Rng& r, std::size_t trial) {
        Model m = random_model(r, trial);
        const std::size_t layers = m.dims.size() - 1;
        Matrix w = random_matrix(r, 6, m.dims.back());
        return Case{[m, w, layers](ad::Tape&, std::span<const Var> p) {
                        Unpacked u = unpack(p, layers, 1);
                        EncoderPass pass(m.input, u.theta);
                        return probe(pass.task_embedding(u.tokens[0], m.mix), w);
                    },
                    model_params(r, m, 1)};
    });
    add("dgi_loss", dgi_case);
    add("graphcl_loss", graphcl_case);
    add("lp_loss", lp_case);
    add("multi_task_loss", multitask_case);
    add("prompt_loss_node", [](Rng& r, std::size_t t) { return prompt_case(r, t, false); });
    add("prompt_loss_graph", [](Rng& r, std::size_t t) { return prompt_case(r, t, true); });
    return c;
}

}  // namespace

std::vector<AuditEntry> gradient_audit(std::size_t trials, std::uint64_t seed, double tolerance) {
    std::vector<AuditEntry> out;
    const auto all = cases();
    for (std::size_t c = 0; c < all.size(); ++c) {
        AuditEntry e{all[c].first, trials, 0.0, true};
        for (std::size_t t = 0; t < trials; ++t) {
            Rng rng(derive_seed(seed, {c, t}));
            try {
                Case k = all[c].second(rng, t);
                e.max_rel_error = std::max(e.max_rel_error, ad::grad_check(k.loss, k.params).max_rel_error);
            } catch (const Error& err) {
                throw Error("gradient audit case " + e.name + " trial " + std::to_string(t) + ": " + err.what());
            }
        }
        e.passed = e.max_rel_error <= tolerance;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace mtgp
