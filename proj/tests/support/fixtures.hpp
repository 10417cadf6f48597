// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small deterministic graphs and datasets shared by the test binaries.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mtgp/graph.hpp"
#include "mtgp/matrix.hpp"
#include "mtgp/random.hpp"

namespace mtgp::testing {

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (double& x : m.values()) x = rng.uniform(lo, hi);
    return m;
}

/// 0-1-2-3-4-5 path with chords (0,2) and (3,5); two classes.
inline Graph toy_graph(std::size_t feature_dim = 4, std::uint64_t seed = 1) {
    Rng rng(seed);
    std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 2}, {3, 5}};
    return Graph(6, std::move(edges), random_matrix(rng, 6, feature_dim, 0.0, 1.0),
                 std::vector<ClassId>{0, 0, 0, 1, 1, 1});
}

inline Dataset toy_dataset(std::size_t feature_dim = 4, std::uint64_t seed = 1) {
    Dataset d;
    d.graphs.push_back(toy_graph(feature_dim, seed));
    d.feature_dim = feature_dim;
    return d;
}

/// Graph on n <= 64 nodes whose edge set is the bits of `mask` over all pairs.
inline Graph graph_from_mask(std::size_t n, std::uint64_t mask, const Matrix& features) {
    std::vector<Edge> edges;
    std::size_t bit = 0;
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 1; v < n; ++v, ++bit) {
            if ((mask >> bit) & 1U) edges.emplace_back(u, v);
        }
    }
    return Graph(n, std::move(edges), features);
}

/// Random graph on `n` nodes with edge probability p.
inline Graph random_graph(Rng& rng, std::size_t n, double p, std::size_t feature_dim,
                          std::optional<std::size_t> classes = std::nullopt) {
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 1; v < n; ++v) {
            if (rng.uniform01() < p) edges.emplace_back(u, v);
        }
    }
    std::optional<std::vector<ClassId>> labels;
    if (classes) {
        labels.emplace();
        for (std::size_t v = 0; v < n; ++v) labels->push_back(static_cast<ClassId>(v % *classes));
    }
    return Graph(n, std::move(edges), random_matrix(rng, n, feature_dim, 0.0, 1.0), std::move(labels));
}

/// Homophilous planted partition with class-correlated binary features.
inline Dataset planted_partition(std::size_t n, std::size_t classes, std::size_t feature_dim, std::size_t degree,
                                 std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ClassId> labels(n);
    std::vector<std::vector<NodeId>> members(classes);
    for (std::size_t v = 0; v < n; ++v) {
        labels[v] = static_cast<ClassId>(v % classes);
        members[v % classes].push_back(static_cast<NodeId>(v));
    }
    Matrix x(n, feature_dim);
    const std::size_t band = feature_dim / classes;
    for (std::size_t v = 0; v < n; ++v) {
        for (int k = 0; k < 3; ++k) x(v, labels[v] * band + rng.uniform_index(band)) = 1.0;
        x(v, rng.uniform_index(feature_dim)) = 1.0;
    }
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n * degree / 2; ++i) {
        const NodeId u = static_cast<NodeId>(rng.uniform_index(n));
        const auto& same = members[labels[u]];
        const NodeId v = rng.uniform01() < 0.8 ? same[rng.uniform_index(same.size())]
                                               : static_cast<NodeId>(rng.uniform_index(n));
        edges.emplace_back(u, v);
    }
    Dataset d;
    d.feature_dim = feature_dim;
    d.graphs.emplace_back(n, std::move(edges), std::move(x), std::move(labels));
    return d;
}

/// `count` small graphs; the class shifts the feature mean.
inline Dataset graph_collection(std::size_t count, std::size_t classes, std::size_t feature_dim, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.feature_dim = feature_dim;
    d.graph_labels.emplace();
    for (std::size_t i = 0; i < count; ++i) {
        const auto c = static_cast<ClassId>(i % classes);
        const std::size_t n = 5 + rng.uniform_index(6);
        std::vector<Edge> edges;
        for (NodeId v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
        for (NodeId u = 0; u < n; ++u) {
            for (NodeId v = u + 2; v < n; ++v) {
                if (rng.uniform01() < 0.1 + 0.15 * c) edges.emplace_back(u, v);
            }
        }
        Matrix x = random_matrix(rng, n, feature_dim, 0.0, 0.5);
        for (std::size_t v = 0; v < n; ++v) x(v, static_cast<std::size_t>(c) % feature_dim) += 1.0;
        d.graphs.emplace_back(n, std::move(edges), std::move(x));
        d.graph_labels->push_back(c);
    }
    return d;
}

/// Directory holding converted benchmark datasets: $MTGP_DATA_DIR, else <source>/data.
inline std::filesystem::path data_dir() {
    if (const char* env = std::getenv("MTGP_DATA_DIR"); env != nullptr && *env != '\0') return env;
    return std::filesystem::path(MTGP_SOURCE_DIR) / "data";
}

}  // namespace mtgp::testing
