// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/fewshot.hpp"

#include <algorithm>
#include <map>

#include "mtgp/errors.hpp"

namespace mtgp {

std::string to_string(TaskKind kind) { return kind == TaskKind::Node ? "node" : "graph"; }

TaskKind parse_task_kind(const std::string& text) {
    if (text == "node") return TaskKind::Node;
    if (text == "graph") return TaskKind::Graph;
    throw ParseError("task kind must be 'node' or 'graph', got '" + text + "'");
}

std::uint64_t FewShotTask::split_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    feed(kind == TaskKind::Node ? 1 : 2);
    feed(shots);
    for (const auto& s : support) {
        feed(s.id);
        feed(static_cast<std::uint64_t>(s.label));
    }
    feed(UINT64_MAX);
    for (const auto& q : query) {
        feed(q.id);
        feed(static_cast<std::uint64_t>(q.label));
    }
    return h;
}

namespace {

std::map<ClassId, std::vector<std::size_t>> group_by_class(std::span<const ClassId> labels) {
    std::map<ClassId, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) groups[labels[i]].push_back(i);
    }
    return groups;
}

}  // namespace

std::size_t max_feasible_shots(std::span<const ClassId> labels) {
    auto groups = group_by_class(labels);
    if (groups.empty()) return 0;
    std::size_t smallest = SIZE_MAX;
    for (const auto& [c, ids] : groups) smallest = std::min(smallest, ids.size());
    return smallest == 0 ? 0 : smallest - 1;
}

FewShotTask sample_few_shot_task(std::span<const ClassId> labels, TaskKind kind, std::size_t shots,
                                 std::uint64_t seed, std::size_t query_cap) {
    if (shots == 0) throw ValidationError("shot count must be at least 1");
    auto groups = group_by_class(labels);
    if (groups.size() < 2) throw ValidationError("few-shot task needs at least two labeled classes");
    for (const auto& [c, ids] : groups) {
        if (ids.size() < shots + 1) {
            throw ValidationError("class " + std::to_string(c) + " has " + std::to_string(ids.size()) +
                                  " labeled instances; m=" + std::to_string(shots) + " needs at least " +
                                  std::to_string(shots + 1) + " (feasible m <= " +
                                  std::to_string(max_feasible_shots(labels)) + ")");
        }
    }

    Rng rng(seed);
    FewShotTask task;
    task.kind = kind;
    task.shots = shots;
    task.seed = seed;
    std::vector<LabeledInstance> pool;
    for (auto& [c, ids] : groups) {
        task.classes.push_back(c);
        rng.shuffle(std::span<std::size_t>(ids));
        std::vector<std::size_t> chosen(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(shots));
        std::sort(chosen.begin(), chosen.end());
        for (std::size_t id : chosen) task.support.push_back({id, c});
        for (std::size_t i = shots; i < ids.size(); ++i) pool.push_back({ids[i], c});
    }
    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    if (pool.size() > query_cap) {
        rng.shuffle(std::span<LabeledInstance>(pool));
        pool.resize(query_cap);
        std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    }
    task.query = std::move(pool);
    return task;
}

std::vector<ClassId> task_labels(const Dataset& dataset, TaskKind kind) {
    if (kind == TaskKind::Graph) {
        if (!dataset.graph_labels) throw ValidationError("dataset has no graph labels for graph classification");
        return *dataset.graph_labels;
    }
    std::vector<ClassId> labels;
    for (std::size_t i = 0; i < dataset.graphs.size(); ++i) {
        const auto& l = dataset.graphs[i].node_labels();
        if (!l) throw ValidationError("graph " + std::to_string(i) + " has no node labels for node classification");
        labels.insert(labels.end(), l->begin(), l->end());
    }
    return labels;
}

FewShotTask sample_few_shot_task(const Dataset& dataset, TaskKind kind, std::size_t shots, std::uint64_t seed,
                                 std::size_t query_cap) {
    const auto labels = task_labels(dataset, kind);
    return sample_few_shot_task(labels, kind, shots, seed, query_cap);
}

}  // namespace mtgp
