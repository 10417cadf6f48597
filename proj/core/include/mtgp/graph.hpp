// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Graph containers, dataset file I/O and graph transformations.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtgp/matrix.hpp"
#include "mtgp/random.hpp"

namespace mtgp {

using NodeId = std::uint32_t;
using ClassId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected attributed graph. Edges are stored once as (min, max) pairs,
/// sorted and deduplicated; self-loops are dropped. Immutable.
class Graph {
public:
    Graph() = default;
    Graph(std::size_t num_nodes, std::vector<Edge> edges, Matrix features,
          std::optional<std::vector<ClassId>> node_labels = std::nullopt);

    std::size_t num_nodes() const { return num_nodes_; }
    std::size_t num_edges() const { return edges_.size(); }
    std::size_t feature_dim() const { return features_.cols(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Matrix& features() const { return features_; }
    const std::optional<std::vector<ClassId>>& node_labels() const { return node_labels_; }

    /// Sorted neighbor list of v.
    const std::vector<NodeId>& neighbors(NodeId v) const;
    std::size_t degree(NodeId v) const { return neighbors(v).size(); }
    bool has_edge(NodeId u, NodeId v) const;

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_ && a.features_ == b.features_ &&
               a.node_labels_ == b.node_labels_;
    }

private:
    std::size_t num_nodes_ = 0;
    std::vector<Edge> edges_;
    Matrix features_;
    std::optional<std::vector<ClassId>> node_labels_;
    std::vector<std::vector<NodeId>> adjacency_;
};

struct Dataset {
    std::vector<Graph> graphs;
    std::optional<std::vector<ClassId>> graph_labels;
    std::size_t feature_dim = 0;

    /// max node label + 1 over all graphs, or 0 when graphs are unlabeled.
    std::size_t node_class_count() const;
    std::size_t graph_class_count() const;
    std::size_t total_nodes() const;

    /// Checks shared feature dimension and label counts. Throws ValidationError.
    void validate() const;
};

/// Reads the JSON dataset container. Throws ParseError for structural
/// problems (naming the field) and ValidationError for semantic ones.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& json_text);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Disjoint union of all graphs; node ids of graph i are offset by the
/// sizes of graphs 0..i-1. Node labels are kept only if every graph has them.
Graph disjoint_union(const Dataset& dataset);
/// Union node ids of each graph, in the layout of disjoint_union.
std::vector<std::vector<NodeId>> union_membership(const Dataset& dataset);
/// disjoint_union restricted to datasets whose graphs all carry node labels.
Graph merge_graphs(const Dataset& dataset);

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
CsrMatrix normalize_adjacency(const Graph& g);

/// Copy with floor(ratio * |E|) distinct edges removed uniformly at random.
Graph drop_edges(const Graph& g, double ratio, Rng& rng);

/// Copy whose feature rows are permuted uniformly at random.
Graph shuffle_features(const Graph& g, Rng& rng);

/// (v, a, b) with (v, a) an edge and (v, b) a non-edge, b != v.
struct LinkTuple {
    NodeId v;
    NodeId a;
    NodeId b;
    friend bool operator==(const LinkTuple&, const LinkTuple&) = default;
};

std::vector<LinkTuple> sample_lp_tuples(const Graph& g, std::size_t count, Rng& rng);

/// {v} and its neighbors, sorted.
std::vector<NodeId> ego_subgraph(const Graph& g, NodeId v);

}  // namespace mtgp
