// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hot paths on a Cora-sized synthetic graph (2708 nodes, 1433 sparse features).

#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "mtgp/encoder.hpp"
#include "mtgp/ops.hpp"
#include "mtgp/pretrain.hpp"
#include "mtgp/prompt.hpp"

using namespace mtgp;

namespace {

const Dataset& cora_like() {
    static const Dataset d = testing::planted_partition(2708, 7, 1433, 4, 1);
    return d;
}

const Checkpoint& checkpoint() {
    static const Checkpoint cp = [] {
        PretrainConfig c;
        c.epochs = 2;
        return pretrain(cora_like(), c);
    }();
    return cp;
}

void BM_Spmm(benchmark::State& state) {
    const GraphInput in = make_graph_input(cora_like().graphs.front());
    Rng rng(3);
    const Matrix h = testing::random_matrix(rng, in.num_nodes(), static_cast<std::size_t>(state.range(0)), -1, 1);
    for (auto _ : state) {
        ad::Tape tape;
        benchmark::DoNotOptimize(ad::spmm(in.adjacency, tape.constant(h)).value());
    }
}
BENCHMARK(BM_Spmm)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_EncoderForward(benchmark::State& state) {
    const GraphInput in = make_graph_input(cora_like().graphs.front());
    const Checkpoint& cp = checkpoint();
    for (auto _ : state) {
        ad::Tape tape;
        std::vector<ad::Var> theta;
        for (const Matrix& m : cp.weights.layers) theta.push_back(tape.constant(m));
        EncoderPass pass(in, theta);
        benchmark::DoNotOptimize(pass.plain().value());
    }
}
BENCHMARK(BM_EncoderForward)->Unit(benchmark::kMillisecond);

void BM_PretrainEpoch(benchmark::State& state) {
    PretrainConfig c;
    c.epochs = 1;
    for (auto _ : state) benchmark::DoNotOptimize(pretrain(cora_like(), c));
}
BENCHMARK(BM_PretrainEpoch)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_PromptTuneEpisode(benchmark::State& state) {
    const Checkpoint& cp = checkpoint();
    const DownstreamData data = DownstreamData::build(cora_like(), TaskKind::Node);
    const FewShotTask task = sample_few_shot_task(cora_like(), TaskKind::Node, 1, 7);
    for (auto _ : state) benchmark::DoNotOptimize(prompt_tune(cp, data, task, TuneConfig{}));
}
BENCHMARK(BM_PromptTuneEpisode)->Unit(benchmark::kMillisecond)->Iterations(5);

}  // namespace

BENCHMARK_MAIN();
