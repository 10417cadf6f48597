// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mtgp/encoder.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/optim.hpp"

using namespace mtgp;
using namespace mtgp::ad;
using mtgp::testing::random_graph;
using mtgp::testing::random_matrix;
using mtgp::testing::toy_graph;

namespace {

std::vector<Var> record_weights(Tape& tape, const EncoderWeights& w) {
    std::vector<Var> out;
    for (const Matrix& m : w.layers) out.push_back(tape.constant(m));
    return out;
}

std::vector<Var> record_tokens(Tape& tape, const TokenSet& t) {
    std::vector<Var> out;
    for (const Matrix& m : t.tokens) out.push_back(tape.constant(m));
    return out;
}

Matrix dense_gcn(const Matrix& a, const Matrix& h, const Matrix& theta) {
    Matrix ah(a.rows(), h.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            for (std::size_t j = 0; j < h.cols(); ++j) ah(i, j) += a(i, k) * h(k, j);
    Matrix out(a.rows(), theta.cols());
    for (std::size_t i = 0; i < ah.rows(); ++i)
        for (std::size_t k = 0; k < ah.cols(); ++k)
            for (std::size_t j = 0; j < theta.cols(); ++j) out(i, j) += ah(i, k) * theta(k, j);
    for (double& v : out.values()) v = std::max(v, 0.0);
    return out;
}

void check_close(const Matrix& a, const Matrix& b, double tol) {
    REQUIRE(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(tol));
}

}  // namespace

TEST_CASE("gcn_layer examples") {
    Tape tape;
    Rng rng(1);
    const Matrix h = random_matrix(rng, 3, 3, 0.0, 1.0);
    const auto eye = std::make_shared<const CsrMatrix>(CsrMatrix::from_dense(Matrix::identity(3)));
    CHECK(gcn_layer(tape.constant(h), eye, tape.constant(Matrix::identity(3))).value() == h);

    // 2-node complete graph, hand-set weights: Â = 0.5 everywhere
    const Graph g(2, {{0, 1}}, Matrix(2, 2, std::vector<double>{1, 2, 3, -4}));
    const GraphInput in = make_graph_input(g);
    const Matrix theta(2, 2, std::vector<double>{1, -1, 0.5, 2});
    // ÂX = [[2,-1],[2,-1]]; times θ = [[1.5,-4],[1.5,-4]]; ReLU
    const Matrix expected(2, 2, std::vector<double>{1.5, 0, 1.5, 0});
    CHECK(gcn_layer(tape.constant(g.features()), in.adjacency, tape.constant(theta)).value() == expected);

    CHECK(gcn_layer(tape.constant(Matrix(2, 2)), in.adjacency, tape.constant(theta)).value() == Matrix(2, 2));
    CHECK_THROWS_AS(gcn_layer(tape.constant(Matrix(2, 3)), in.adjacency, tape.constant(theta)), DimensionError);
}

TEST_CASE("plain forward matches a dense oracle") {
    Rng rng(2);
    const Graph g = random_graph(rng, 7, 0.4, 5);
    const GraphInput in = make_graph_input(g);
    const std::vector<std::size_t> dims{5, 4, 3};
    const EncoderWeights w = EncoderWeights::glorot(dims, rng);
    Tape tape;
    EncoderPass pass(in, record_weights(tape, w));
    const Matrix a = in.adjacency->to_dense();
    const Matrix oracle = dense_gcn(a, dense_gcn(a, g.features(), w.layers[0]), w.layers[1]);
    check_close(pass.plain().value(), oracle, 1e-12);
    const auto layers = plain_layer_outputs(in, w);
    CHECK(layers.back() == pass.plain().value());
    CHECK(w.parameter_count() == 5 * 4 + 4 * 3);
    CHECK(w.dims() == dims);
}

TEST_CASE("identity tokens leave every layer unchanged") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Graph g = random_graph(rng, 4 + rng.uniform_index(6), 0.4, 3);
        const std::vector<std::size_t> dims =
            trial % 2 == 0 ? std::vector<std::size_t>{3, 6} : std::vector<std::size_t>{3, 5, 4};
        const EncoderWeights w = EncoderWeights::glorot(dims, rng);
        Tape tape;
        EncoderPass pass(make_graph_input(g), record_weights(tape, w));
        const Matrix plain = pass.plain().value();
        for (std::size_t l = 0; l < dims.size(); ++l) {
            CHECK(pass.token_forward(tape.constant(Matrix(1, dims[l], 1.0)), l).value() == plain);
        }
    }
}

TEST_CASE("token_forward examples") {
    Rng rng(4);
    const Graph g = toy_graph(2);
    const GraphInput in = make_graph_input(g);
    const std::vector<std::size_t> dims{2, 3};
    const EncoderWeights w = EncoderWeights::glorot(dims, rng);
    Tape tape;
    EncoderPass pass(in, record_weights(tape, w));

    CHECK(pass.token_forward(tape.constant(Matrix(1, 3, 0.0)), 1).value() == Matrix(6, 3));

    const Matrix t(1, 2, std::vector<double>{2.0, 0.5});
    Matrix x = g.features();
    for (std::size_t v = 0; v < 6; ++v) {
        x(v, 0) *= 2.0;
        x(v, 1) *= 0.5;
    }
    const Matrix oracle = dense_gcn(in.adjacency->to_dense(), x, w.layers[0]);
    check_close(pass.token_forward(tape.constant(t), 0).value(), oracle, 1e-12);

    // output-layer token scales the post-ReLU output
    const Matrix t1(1, 3, std::vector<double>{-1.0, 2.0, 0.0});
    const Matrix plain = pass.plain().value();
    const Matrix out = pass.token_forward(tape.constant(t1), 1).value();
    for (std::size_t v = 0; v < 6; ++v)
        for (std::size_t j = 0; j < 3; ++j) CHECK(out(v, j) == plain(v, j) * t1(0, j));

    CHECK_THROWS_AS(pass.token_forward(tape.constant(Matrix(1, 3, 1.0)), 0), DimensionError);
}

TEST_CASE("task_embedding mixes the layer passes") {
    Rng rng(5);
    const Graph g = random_graph(rng, 8, 0.35, 4);
    const std::vector<std::size_t> dims{4, 5};
    const EncoderWeights w = EncoderWeights::glorot(dims, rng);
    TokenSet tokens{{random_matrix(rng, 1, 4, 0.5, 1.5), random_matrix(rng, 1, 5, 0.5, 1.5)}};
    Tape tape;
    EncoderPass pass(make_graph_input(g), record_weights(tape, w));
    const auto tv = record_tokens(tape, tokens);

    CHECK(pass.task_embedding(tv, LayerMix{{0.0, 1.0}}).value() == pass.token_forward(tv[1], 1).value());

    const Matrix h1 = pass.task_embedding(tv, LayerMix{{0.3, 0.7}}).value();
    const Matrix h2 = pass.task_embedding(tv, LayerMix{{0.6, 1.4}}).value();
    check_close(h2, [&] {
        Matrix d = h1;
        for (double& v : d.values()) v *= 2.0;
        return d;
    }(), 1e-14);

    const auto ones = record_tokens(tape, TokenSet::ones(dims));
    const Matrix plain = pass.plain().value();
    const Matrix mixed = pass.task_embedding(ones, LayerMix{{0.25, 2.0}}).value();
    for (std::size_t i = 0; i < plain.size(); ++i)
        CHECK(mixed.values()[i] == doctest::Approx(2.25 * plain.values()[i]).epsilon(1e-15));

    const LayerMix zero{{0.0, 0.0}}, short_mix{{1.0}}, negative{{-1.0, 2.0}};
    CHECK_THROWS_AS(zero.validate(1), ValidationError);
    CHECK_THROWS_AS(short_mix.validate(1), ValidationError);
    CHECK_THROWS_AS(negative.validate(1), ValidationError);
}

TEST_CASE("task_embedding gradients reach tokens and weights") {
    Rng rng(6);
    const Graph g = random_graph(rng, 6, 0.5, 3);
    const GraphInput in = make_graph_input(g);
    const std::vector<std::size_t> dims{3, 4};
    const EncoderWeights w = EncoderWeights::glorot(dims, rng);
    std::vector<Matrix> params{w.layers[0], random_matrix(rng, 1, 3, 0.5, 1.5), random_matrix(rng, 1, 4, 0.5, 1.5)};
    for (double& v : params[0].values()) v = std::abs(v) + 0.05;
    const LossBuilder f = [&](Tape&, std::span<const Var> p) {
        EncoderPass pass(in, {p[0]});
        const std::vector<Var> tokens{p[1], p[2]};
        return sum(sigmoid(pass.task_embedding(tokens, LayerMix{{0.4, 1.0}})));
    };
    CHECK(grad_check(f, params).max_rel_error <= 1e-5);
}

TEST_CASE("readout") {
    Tape tape;
    const Matrix h(3, 2, std::vector<double>{1, 2, 3, 4, 5, 9});
    const Var hv = tape.constant(h);
    const std::vector<std::size_t> one{1}, two{0, 2}, none{};
    CHECK(readout(hv, one).value() == Matrix(1, 2, std::vector<double>{3, 4}));
    CHECK(readout(hv, two).value() == Matrix(1, 2, std::vector<double>{3, 5.5}));
    CHECK(readout(hv).value() == Matrix(1, 2, std::vector<double>{3, 5}));
    CHECK_THROWS_AS(readout(hv, none), ValidationError);

    const Matrix p(3, 2, std::vector<double>{5, 9, 1, 2, 3, 4});
    CHECK(readout(tape.constant(p)).value() == readout(hv).value());

    // ego-subgraph readout against a mean over an adjacency scan
    Rng rng(7);
    const Graph g = random_graph(rng, 10, 0.3, 3);
    const Var gv = tape.constant(g.features());
    for (NodeId v = 0; v < 10; ++v) {
        std::vector<std::size_t> rows{v};
        for (NodeId u = 0; u < 10; ++u)
            if (g.has_edge(v, u)) rows.push_back(u);
        Matrix mean(1, 3);
        for (std::size_t r : rows)
            for (std::size_t j = 0; j < 3; ++j) mean(0, j) += g.features()(r, j) / static_cast<double>(rows.size());
        const auto ego = ego_subgraph(g, v);
        const std::vector<std::size_t> ego_rows(ego.begin(), ego.end());
        check_close(readout(gv, ego_rows).value(), mean, 1e-14);
    }
}

TEST_CASE("receptive field rows equal the full-graph pass bit for bit") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Graph g = random_graph(rng, 30, 0.08, 4);
        const GraphInput full = make_graph_input(g);
        const std::vector<std::size_t> dims =
            trial % 2 == 0 ? std::vector<std::size_t>{4, 6} : std::vector<std::size_t>{4, 5, 3};
        const EncoderWeights w = EncoderWeights::glorot(dims, rng);
        TokenSet tokens = TokenSet::ones(dims);
        for (Matrix& t : tokens.tokens) t = random_matrix(rng, 1, t.cols(), 0.5, 1.5);
        const std::vector<NodeId> targets{static_cast<NodeId>(rng.uniform_index(30)),
                                          static_cast<NodeId>(rng.uniform_index(30))};
        std::vector<NodeId> sorted = targets;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        const ReceptiveField rf = receptive_field(g, full, sorted, dims.size() - 1);

        Tape tape;
        EncoderPass a(full, record_weights(tape, w));
        EncoderPass b(rf.input, record_weights(tape, w));
        const LayerMix mix{std::vector<double>(dims.size(), 0.5)};
        const Matrix ha = a.task_embedding(record_tokens(tape, tokens), mix).value();
        const Matrix hb = b.task_embedding(record_tokens(tape, tokens), mix).value();
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const auto ra = ha.row(sorted[i]);
            const auto rb = hb.row(rf.target_rows[i]);
            CHECK(std::equal(ra.begin(), ra.end(), rb.begin()));
            CHECK(rf.local(sorted[i]) == rf.target_rows[i]);
        }
        CHECK(rf.nodes.size() <= 30);
    }
}

TEST_CASE("weights and tokens validate shapes") {
    Rng rng(9);
    const std::vector<std::size_t> dims{3, 4};
    EncoderWeights w = EncoderWeights::glorot(dims, rng);
    CHECK_NOTHROW(w.validate());
    w.layers.push_back(Matrix(5, 2));
    CHECK_THROWS_AS(w.validate(), ValidationError);
    CHECK_THROWS_AS(TokenSet::ones(dims).validate(std::vector<std::size_t>{3, 5}), ValidationError);
    CHECK(TokenSet::ones(dims).parameter_count() == 7);
}
