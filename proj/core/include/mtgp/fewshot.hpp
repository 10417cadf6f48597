// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtgp/graph.hpp"

namespace mtgp {

enum class TaskKind { Node, Graph };

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& text);

struct LabeledInstance {
    std::size_t id;
    ClassId label;
    friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

/// m-shot episode. Support is sorted by (class, id), query by id.
struct FewShotTask {
    TaskKind kind = TaskKind::Node;
    std::vector<ClassId> classes;
    std::vector<LabeledInstance> support;
    std::vector<LabeledInstance> query;
    std::size_t shots = 0;
    std::uint64_t seed = 0;

    /// FNV-1a digest of the split; equal for identical splits.
    std::uint64_t split_hash() const;
    friend bool operator==(const FewShotTask&, const FewShotTask&) = default;
};

inline constexpr std::size_t kDefaultQueryCap = 500;

/// Draws `shots` support instances per class; every other labeled instance
/// of those classes is query, subsampled to `query_cap`. Deterministic in
/// `seed`. Throws ValidationError naming any class with fewer than
/// shots + 1 instances.
FewShotTask sample_few_shot_task(std::span<const ClassId> labels, TaskKind kind, std::size_t shots,
                                 std::uint64_t seed, std::size_t query_cap = kDefaultQueryCap);

/// Node tasks draw from the merged graph's node labels, graph tasks from
/// the dataset's graph labels.
FewShotTask sample_few_shot_task(const Dataset& dataset, TaskKind kind, std::size_t shots, std::uint64_t seed,
                                 std::size_t query_cap = kDefaultQueryCap);

/// Labels used for tasks of the given kind.
std::vector<ClassId> task_labels(const Dataset& dataset, TaskKind kind);

/// Largest m for which every class still leaves one query instance.
std::size_t max_feasible_shots(std::span<const ClassId> labels);

}  // namespace mtgp
