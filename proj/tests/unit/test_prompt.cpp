// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <functional>

#include "fixtures.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/fewshot.hpp"
#include "mtgp/prompt.hpp"

using namespace mtgp;
using namespace mtgp::ad;
using mtgp::testing::graph_collection;
using mtgp::testing::planted_partition;
using mtgp::testing::random_matrix;

namespace {

Checkpoint small_checkpoint(const Dataset& d, std::size_t epochs = 20) {
    PretrainConfig c;
    c.hidden = {8};
    c.epochs = epochs;
    c.lr = 1e-2;
    c.lp_tuples = 16;
    return pretrain(d, c);
}

const Dataset& node_data() {
    static const Dataset d = planted_partition(60, 3, 12, 4, 2);
    return d;
}

const Checkpoint& node_checkpoint() {
    static const Checkpoint cp = small_checkpoint(node_data());
    return cp;
}

std::vector<Var> constants(Tape& tape, const std::vector<Matrix>& ms) {
    std::vector<Var> out;
    for (const Matrix& m : ms) out.push_back(tape.constant(m));
    return out;
}

Matrix dense(const CsrMatrix& m) { return m.to_dense(); }

Matrix mm(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
    return c;
}

Matrix relu(Matrix m) {
    for (double& v : m.values()) v = std::max(v, 0.0);
    return m;
}

Matrix col_scale(Matrix m, const Matrix& t) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= t(0, j);
    return m;
}

void axpy(Matrix& y, double a, const Matrix& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] += a * x.values()[i];
}

// One-layer encoder with a token on layer 0 or 1, written out directly.
Matrix oracle_pass(const Matrix& a, const Matrix& x, const Matrix& theta, const Matrix& t, std::size_t layer) {
    if (layer == 0) return relu(mm(mm(a, col_scale(x, t)), theta));
    return col_scale(relu(mm(mm(a, x), theta)), t);
}

double cos(std::span<const double> u, std::span<const double> v) {
    double uv = 0, uu = 0, vv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    return uv / std::sqrt(uu * vv);
}

std::uint64_t fnv(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
    return h;
}

}  // namespace

TEST_CASE("variant flags") {
    CHECK(PromptVariant::parse("1") == PromptVariant{false, false, false});
    CHECK(PromptVariant::parse("2") == PromptVariant{false, false, true});
    CHECK(PromptVariant::parse("3") == PromptVariant{true, false, false});
    CHECK(PromptVariant::parse("4") == PromptVariant{true, false, true});
    CHECK(PromptVariant::parse("5") == PromptVariant{true, true, false});
    CHECK(PromptVariant::parse("full") == PromptVariant{true, true, true});
    for (const char* n : {"1", "2", "3", "4", "5", "full"}) CHECK(PromptVariant::parse(n).name() == n);
    CHECK_THROWS_AS(PromptVariant::parse("6"), ParseError);
    const PromptVariant bad{false, true, true};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("tunable parameter accounting") {
    const std::vector<std::size_t> dims{1433, 256};
    const PromptState s = PromptState::initial(dims, 3);
    CHECK(s.parameter_count() == 3 * 2 + 1433 + 256 + 2);
    CHECK(tunable_parameter_count(s, PromptVariant::parse("full")) == 1697);
    CHECK(tunable_parameter_count(s, PromptVariant::parse("5")) == 6 + 1);
    CHECK(tunable_parameter_count(s, PromptVariant::parse("4")) == 1433 + 256 + 2);
    CHECK(tunable_parameter_count(s, PromptVariant::parse("2")) == 1433 + 256 + 1);
    CHECK(tunable_parameter_count(s, PromptVariant::parse("3")) == 0);
    CHECK(tunable_parameter_count(s, PromptVariant::parse("1")) == 0);
    // encoder 1433 x 256
    CHECK(1697 * 100 < 1433 * 256);
}

TEST_CASE("prompt state initialization and JSON") {
    const std::vector<std::size_t> dims{4, 6, 5};
    PromptState s = PromptState::initial(dims, 3);
    CHECK(s.gamma.size() == 3);
    CHECK(s.gamma[1] == Matrix(1, 3, 1.0 / 3.0));
    CHECK(s.open[2] == Matrix(1, 5, 1.0));
    CHECK(s.delta_com.item() == 0.5);
    CHECK(s.delta_op.item() == 0.5);
    CHECK_NOTHROW(s.validate(dims, 3));
    CHECK_THROWS_AS(s.validate(dims, 2), ValidationError);
    s.gamma[0](0, 1) = 0.1 + 0.2;
    s.open[1](0, 3) = -1.0 / 7.0;
    CHECK(prompt_state_from_json(prompt_state_to_json(s)) == s);
    CHECK_THROWS_AS(prompt_state_from_json(R"({"format": "mtgp-checkpoint", "version": 1})"), CompatibilityError);
}

TEST_CASE("compose_prompt") {
    Rng rng(1);
    const std::vector<std::size_t> dims{3, 4};
    std::vector<TokenSet> tokens(3);
    for (TokenSet& t : tokens) t.tokens = {random_matrix(rng, 1, 3), random_matrix(rng, 1, 4)};
    Tape tape;
    for (std::size_t k = 0; k < 3; ++k) {
        Matrix onehot(1, 3);
        onehot(0, k) = 1.0;
        for (std::size_t l = 0; l < 2; ++l)
            CHECK(compose_prompt(tokens, tape.constant(onehot), l).value() == tokens[k].tokens[l]);
    }
    CHECK(compose_prompt(tokens, tape.constant(Matrix(1, 3)), 1).value() == Matrix(1, 4));
    const Matrix half(1, 3, std::vector<double>{0.5, 0.5, 0.0});
    const Matrix avg = compose_prompt(tokens, tape.constant(half), 1).value();
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(avg(0, j) == doctest::Approx((tokens[0].tokens[1](0, j) + tokens[1].tokens[1](0, j)) / 2).epsilon(1e-15));
    CHECK_THROWS_AS(compose_prompt({}, tape.constant(half), 0), ValidationError);
    CHECK_THROWS_AS(compose_prompt(tokens, tape.constant(Matrix(1, 2)), 0), DimensionError);
}

TEST_CASE("composition recovery") {
    const Checkpoint& cp = node_checkpoint();
    const Graph g = pretraining_graph(node_data());
    const GraphInput in = make_graph_input(g);
    const auto dims = cp.weights.dims();
    for (std::size_t k = 0; k < 3; ++k) {
        PromptState s = PromptState::initial(dims, 3);
        for (Matrix& gm : s.gamma) {
            gm = Matrix(1, 3);
            gm(0, k) = 1.0;
        }
        s.delta_com = Matrix(1, 1, 1.0);
        s.delta_op = Matrix(1, 1, 0.0);
        Tape tape;
        EncoderPass pass(in, constants(tape, cp.weights.layers));
        const PromptVars vars = record_prompt(tape, s, PromptVariant{});
        const Matrix h = dual_forward(pass, cp.tokens, vars, cp.config.mix, PromptVariant::parse("5")).value();
        CHECK(h == pretext_embedding(cp, in, k));
    }
}

TEST_CASE("identity open prompts give the scaled plain output") {
    const Checkpoint& cp = node_checkpoint();
    const GraphInput in = make_graph_input(pretraining_graph(node_data()));
    PromptState s = PromptState::initial(cp.weights.dims(), 3);
    s.delta_com = Matrix(1, 1, 0.0);
    s.delta_op = Matrix(1, 1, 1.0);
    Tape tape;
    EncoderPass pass(in, constants(tape, cp.weights.layers));
    const Matrix h = dual_forward(pass, cp.tokens, record_prompt(tape, s, {}), cp.config.mix, {}).value();
    const Matrix plain = pass.plain().value();
    const double total = cp.config.mix.total();
    for (std::size_t i = 0; i < h.size(); ++i)
        CHECK(h.values()[i] == doctest::Approx(total * plain.values()[i]).epsilon(1e-14));

    // no branch at all: the plain output
    const Matrix v1 = dual_forward(pass, cp.tokens, record_prompt(tape, s, PromptVariant::parse("1")), cp.config.mix,
                                   PromptVariant::parse("1"))
                          .value();
    CHECK(v1 == plain);
}

TEST_CASE("dual_forward matches a straight-line oracle") {
    const Checkpoint& cp = node_checkpoint();
    const Graph g = pretraining_graph(node_data());
    const GraphInput in = make_graph_input(g);
    const auto dims = cp.weights.dims();
    Rng rng(3);
    PromptState s = PromptState::initial(dims, 3);
    for (Matrix& m : s.gamma) m = random_matrix(rng, 1, 3, 0.0, 1.0);
    for (Matrix& m : s.open) m = random_matrix(rng, 1, m.cols(), 0.5, 1.5);
    s.delta_com = Matrix(1, 1, 0.3);
    s.delta_op = Matrix(1, 1, 0.9);
    const LayerMix mix{{0.2, 1.0}};

    const Matrix a = dense(*in.adjacency), x = g.features(), theta = cp.weights.layers[0];
    Matrix expected(g.num_nodes(), dims[1]);
    for (std::size_t l = 0; l < 2; ++l) {
        Matrix p(1, dims[l]);
        for (std::size_t k = 0; k < 3; ++k) axpy(p, s.gamma[l](0, k), cp.tokens[k].tokens[l]);
        axpy(expected, 0.3 * mix.alpha[l], oracle_pass(a, x, theta, p, l));
        axpy(expected, 0.9 * mix.alpha[l], oracle_pass(a, x, theta, s.open[l], l));
    }
    Tape tape;
    EncoderPass pass(in, constants(tape, cp.weights.layers));
    const Matrix h = dual_forward(pass, cp.tokens, record_prompt(tape, s, {}), mix, {}).value();
    for (std::size_t i = 0; i < h.size(); ++i)
        CHECK(h.values()[i] == doctest::Approx(expected.values()[i]).epsilon(1e-12));
}

TEST_CASE("prototype_embeddings") {
    Rng rng(4);
    Tape tape;
    const Matrix e = random_matrix(rng, 7, 3);
    const Var ev = tape.constant(e);
    const std::vector<std::size_t> one{0, 1};
    const std::vector<std::size_t> m1_rows{2, 5};
    const Matrix p1 = prototype_embeddings(gather_rows(ev, m1_rows), one, 2).value();
    CHECK(p1.row(0)[1] == e(2, 1));
    CHECK(p1.row(1)[2] == e(5, 2));

    const Matrix same(2, 3, std::vector<double>{1, 2, 3, 1, 2, 3});
    const std::vector<std::size_t> both{0, 0};
    CHECK(prototype_embeddings(tape.constant(same), both, 1).value() == Matrix(1, 3, std::vector<double>{1, 2, 3}));

    const std::vector<std::size_t> cls{1, 0, 1, 0, 1, 0, 1};
    const Matrix p = prototype_embeddings(ev, cls, 2).value();
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(p(0, j) == doctest::Approx((e(1, j) + e(3, j) + e(5, j)) / 3).epsilon(1e-15));
        CHECK(p(1, j) == doctest::Approx((e(0, j) + e(2, j) + e(4, j) + e(6, j)) / 4).epsilon(1e-15));
    }
    CHECK_THROWS_AS(prototype_embeddings(ev, cls, 3), ValidationError);
}

TEST_CASE("prompt_tuning_loss examples") {
    Tape tape;
    const std::vector<std::size_t> y0{0};
    const Matrix protos(2, 2, std::vector<double>{1, 0, 0, 1});
    const double l = prompt_tuning_loss(tape.constant(Matrix(1, 2, std::vector<double>{3, 0})), tape.constant(protos), y0, 1.0)
                         .value()
                         .item();
    CHECK(l == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-14));
    CHECK(l == doctest::Approx(0.3133).epsilon(1e-3));

    const Matrix identical(4, 3, 0.7);
    Rng rng(5);
    const Matrix e = random_matrix(rng, 5, 3);
    const std::vector<std::size_t> labels{0, 3, 2, 1, 3};
    CHECK(prompt_tuning_loss(tape.constant(e), tape.constant(identical), labels, 0.5).value().item() ==
          doctest::Approx(5 * std::log(4.0)).epsilon(1e-14));

    const Matrix p3 = random_matrix(rng, 3, 3);
    const std::vector<std::size_t> l3{2, 0, 1, 1, 0};
    double oracle = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        double z = 0.0;
        for (std::size_t c = 0; c < 3; ++c) z += std::exp(cos(e.row(i), p3.row(c)) / 0.5);
        oracle -= std::log(std::exp(cos(e.row(i), p3.row(l3[i])) / 0.5) / z);
    }
    CHECK(prompt_tuning_loss(tape.constant(e), tape.constant(p3), l3, 0.5).value().item() ==
          doctest::Approx(oracle).epsilon(1e-12));

    CHECK_THROWS_AS(prompt_tuning_loss(tape.constant(Matrix(1, 2)), tape.constant(protos), y0, 1.0), DomainError);
    CHECK(prompt_tuning_loss(tape.constant(Matrix(1, 2)), tape.constant(protos), y0, 1.0, kNormFloor).value().item() ==
          doctest::Approx(std::log(2.0)));
}

TEST_CASE("classify") {
    const Matrix protos(3, 3, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
    const Matrix e(2, 3, std::vector<double>{0, 2, 0, 0, 0, 0.1});
    const Classification c = classify(e, protos, 0.5);
    CHECK(c.predicted == std::vector<std::size_t>{1, 2});

    Rng rng(6);
    const Matrix r = random_matrix(rng, 20, 3);
    const Classification cr = classify(r, random_matrix(rng, 4, 3), 0.5);
    for (std::size_t i = 0; i < 20; ++i) {
        double z = 0.0;
        std::size_t best = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            z += cr.distribution(i, j);
            if (cr.distribution(i, j) > cr.distribution(i, best)) best = j;
        }
        CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(cr.predicted[i] == best);
    }

    // ties go to the smallest index, a zero row scores 0 everywhere
    const Matrix tie(1, 2, std::vector<double>{1, 1});
    const Matrix tp(2, 2, std::vector<double>{1, 0, 0, 1});
    CHECK(classify(tie, tp, 0.5).predicted[0] == 0);
    const Classification zero = classify(Matrix(1, 2), tp, 0.5);
    CHECK(zero.predicted[0] == 0);
    CHECK(zero.distribution(0, 1) == doctest::Approx(0.5));

    // hand-scored 2-class task: 3 of 4 right
    const Matrix q(4, 2, std::vector<double>{2, 0.1, 0.3, 1, 1, 0.9, -1, 0.2});
    const std::vector<std::size_t> truth{0, 1, 1, 1};
    const Classification cq = classify(q, tp, 0.5);
    std::size_t right = 0;
    for (std::size_t i = 0; i < 4; ++i) right += cq.predicted[i] == truth[i];
    CHECK(right == 3);
}

TEST_CASE("classify is invariant under a constant shift of scores") {
    Rng rng(7);
    const Matrix e = random_matrix(rng, 10, 4);
    const Matrix p = random_matrix(rng, 3, 4);
    const Classification base = classify(e, p, 0.5);
    // appending a constant coordinate c to embeddings and 0 to prototypes
    // changes norms; instead compare against the shifted-score softmax directly
    for (std::size_t i = 0; i < 10; ++i) {
        std::vector<double> s(3);
        for (std::size_t j = 0; j < 3; ++j) s[j] = cos(e.row(i), p.row(j)) / 0.5 + 17.0;
        double z = 0.0;
        for (double v : s) z += std::exp(v);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(base.distribution(i, j) == doctest::Approx(std::exp(s[j]) / z).epsilon(1e-12));
    }
}

TEST_CASE("prompt_tune") {
    const Dataset& d = node_data();
    const Checkpoint& cp = node_checkpoint();
    const DownstreamData data = DownstreamData::build(d, TaskKind::Node);
    const FewShotTask task = sample_few_shot_task(d, TaskKind::Node, 2, 11);

    SUBCASE("zero steps returns the initial state") {
        TuneConfig c;
        c.steps = 0;
        const TuneResult r = prompt_tune(cp, data, task, c);
        CHECK(r.state == PromptState::initial(cp.weights.dims(), 3));
        CHECK(r.losses.empty());
    }
    SUBCASE("support loss decreases over 100 steps") {
        TuneConfig c;
        c.steps = 100;
        const TuneResult r = prompt_tune(cp, data, task, c);
        REQUIRE(r.losses.size() == 100);
        CHECK(r.losses.back() < r.losses.front());
        const TaskEvaluation ev = evaluate_task(cp, data, task, r.state, c);
        CHECK(ev.predictions.size() == task.query.size());
        CHECK(ev.accuracy >= 0.0);
        CHECK(ev.accuracy <= 1.0);
    }
    SUBCASE("the checkpoint is frozen") {
        const Checkpoint before = cp;
        const std::uint64_t hash = fnv(checkpoint_to_json(cp));
        TuneConfig c;
        c.steps = 200;
        prompt_tune(cp, data, task, c);
        CHECK(fnv(checkpoint_to_json(cp)) == hash);
        CHECK(cp == before);
    }
    SUBCASE("variants tune only their own parameters") {
        TuneConfig c;
        c.steps = 30;
        c.variant = PromptVariant::parse("5");
        const TuneResult v5 = prompt_tune(cp, data, task, c);
        const PromptState init = PromptState::initial(cp.weights.dims(), 3);
        CHECK(v5.state.delta_op.item() == 0.0);
        CHECK(v5.state.open == init.open);
        CHECK_FALSE(v5.state.gamma == init.gamma);

        c.variant = PromptVariant::parse("2");
        const TuneResult v2 = prompt_tune(cp, data, task, c);
        CHECK(v2.state.gamma == init.gamma);
        CHECK(v2.state.delta_com.item() == 0.0);
        CHECK_FALSE(v2.state.open == init.open);

        c.variant = PromptVariant::parse("3");
        const TuneResult v3 = prompt_tune(cp, data, task, c);
        CHECK(v3.losses.empty());
        CHECK(v3.state.gamma == init.gamma);
        CHECK(v3.state.open == init.open);
        CHECK(v3.state.delta_op.item() == 0.0);
    }
    SUBCASE("tuning is deterministic") {
        TuneConfig c;
        c.steps = 20;
        CHECK(prompt_tune(cp, data, task, c).state == prompt_tune(cp, data, task, c).state);
    }
    SUBCASE("incompatible features are rejected") {
        const Dataset other = planted_partition(30, 3, 9, 3, 1);
        const DownstreamData od = DownstreamData::build(other, TaskKind::Node);
        const FewShotTask ot = sample_few_shot_task(other, TaskKind::Node, 1, 0);
        CHECK_THROWS_AS(prompt_tune(cp, od, ot, TuneConfig{}), CompatibilityError);
    }
}

TEST_CASE("graph tasks read out each graph") {
    const Dataset d = graph_collection(24, 2, 4, 9);
    const Checkpoint cp = small_checkpoint(d, 10);
    const DownstreamData data = DownstreamData::build(d, TaskKind::Graph);
    CHECK(data.instances.size() == 24);
    const FewShotTask task = sample_few_shot_task(d, TaskKind::Graph, 3, 5);
    TuneConfig c;
    c.steps = 40;
    const TuneResult r = prompt_tune(cp, data, task, c);
    CHECK(r.losses.back() < r.losses.front());
    const TaskEvaluation ev = evaluate_task(cp, data, task, r.state, c);
    CHECK(ev.predictions.size() == task.query.size());
}
