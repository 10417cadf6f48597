// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mtgp/errors.hpp"

namespace mtgp {

using nlohmann::json;

Graph::Graph(std::size_t num_nodes, std::vector<Edge> edges, Matrix features,
             std::optional<std::vector<ClassId>> node_labels)
    : num_nodes_(num_nodes), features_(std::move(features)), node_labels_(std::move(node_labels)) {
    if (features_.rows() != num_nodes_) {
        throw ValidationError("feature matrix has " + std::to_string(features_.rows()) + " rows for " +
                              std::to_string(num_nodes_) + " nodes");
    }
    if (node_labels_ && node_labels_->size() != num_nodes_) {
        throw ValidationError("node_labels has " + std::to_string(node_labels_->size()) + " entries for " +
                              std::to_string(num_nodes_) + " nodes");
    }
    if (node_labels_) {
        for (ClassId c : *node_labels_) {
            if (c < 0) throw ValidationError("negative node label " + std::to_string(c));
        }
    }
    for (auto& [u, v] : edges) {
        if (u >= num_nodes_ || v >= num_nodes_) {
            throw IndexError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") references a node >= " +
                             std::to_string(num_nodes_));
        }
        if (u > v) std::swap(u, v);
    }
    std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    adjacency_.assign(num_nodes_, {});
    for (const auto& [u, v] : edges_) {
        adjacency_[u].push_back(v);
        adjacency_[v].push_back(u);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

const std::vector<NodeId>& Graph::neighbors(NodeId v) const {
    if (v >= num_nodes_) throw IndexError("node " + std::to_string(v) + " out of range");
    return adjacency_[v];
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    const auto& n = neighbors(u);
    return std::binary_search(n.begin(), n.end(), v);
}

std::size_t Dataset::node_class_count() const {
    ClassId mx = -1;
    for (const Graph& g : graphs) {
        if (!g.node_labels()) continue;
        for (ClassId c : *g.node_labels()) mx = std::max(mx, c);
    }
    return static_cast<std::size_t>(mx + 1);
}

std::size_t Dataset::graph_class_count() const {
    if (!graph_labels) return 0;
    ClassId mx = -1;
    for (ClassId c : *graph_labels) mx = std::max(mx, c);
    return static_cast<std::size_t>(mx + 1);
}

std::size_t Dataset::total_nodes() const {
    std::size_t n = 0;
    for (const Graph& g : graphs) n += g.num_nodes();
    return n;
}

void Dataset::validate() const {
    if (graphs.empty()) throw ValidationError("dataset has no graphs");
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        if (graphs[i].feature_dim() != feature_dim) {
            throw ValidationError("graph " + std::to_string(i) + " has feature dimension " +
                                  std::to_string(graphs[i].feature_dim()) + ", dataset declares " +
                                  std::to_string(feature_dim));
        }
    }
    if (graph_labels) {
        if (graph_labels->size() != graphs.size()) {
            throw ValidationError("graph_labels has " + std::to_string(graph_labels->size()) + " entries for " +
                                  std::to_string(graphs.size()) + " graphs");
        }
        for (ClassId c : *graph_labels) {
            if (c < 0) throw ValidationError("negative graph label " + std::to_string(c));
        }
    }
}

namespace {

const json& field(const json& obj, const char* name, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    auto it = obj.find(name);
    if (it == obj.end()) throw ParseError(where + "." + name + ": missing field");
    return *it;
}

std::size_t as_count(const json& v, const std::string& where) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ParseError(where + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::optional<std::vector<ClassId>> as_labels(const json& v, const std::string& where) {
    if (v.is_null()) return std::nullopt;
    if (!v.is_array()) throw ParseError(where + ": expected an array or null");
    std::vector<ClassId> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer()) throw ParseError(where + "[" + std::to_string(i) + "]: expected an integer");
        out.push_back(v[i].get<ClassId>());
    }
    return out;
}

Graph parse_graph(const json& g, std::size_t feature_dim, const std::string& where) {
    const std::size_t n = as_count(field(g, "num_nodes", where), where + ".num_nodes");

    const json& je = field(g, "edges", where);
    if (!je.is_array()) throw ParseError(where + ".edges: expected an array");
    std::vector<Edge> edges;
    edges.reserve(je.size());
    for (std::size_t i = 0; i < je.size(); ++i) {
        const std::string w = where + ".edges[" + std::to_string(i) + "]";
        if (!je[i].is_array() || je[i].size() != 2) throw ParseError(w + ": expected a pair [u, v]");
        const std::size_t u = as_count(je[i][0], w);
        const std::size_t v = as_count(je[i][1], w);
        if (u >= n || v >= n) {
            throw ValidationError(w + ": node index out of range for " + std::to_string(n) + " nodes");
        }
        edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }

    const json& jf = field(g, "features", where);
    if (!jf.is_array()) throw ParseError(where + ".features: expected an array");
    if (jf.size() != n) {
        throw ValidationError(where + ".features: " + std::to_string(jf.size()) + " rows for " +
                              std::to_string(n) + " nodes");
    }
    Matrix x(n, feature_dim);
    for (std::size_t r = 0; r < n; ++r) {
        const std::string w = where + ".features[" + std::to_string(r) + "]";
        if (!jf[r].is_array()) throw ParseError(w + ": expected an array");
        if (jf[r].size() != feature_dim) {
            throw ValidationError(w + ": " + std::to_string(jf[r].size()) + " values, feature_dim is " +
                                  std::to_string(feature_dim));
        }
        for (std::size_t c = 0; c < feature_dim; ++c) {
            if (!jf[r][c].is_number()) throw ParseError(w + ": expected numbers");
            const double val = jf[r][c].get<double>();
            if (!std::isfinite(val)) throw ValidationError(w + ": non-finite feature value");
            x(r, c) = val;
        }
    }

    std::optional<std::vector<ClassId>> labels;
    if (auto it = g.find("node_labels"); it != g.end()) labels = as_labels(*it, where + ".node_labels");
    try {
        return Graph(n, std::move(edges), std::move(x), std::move(labels));
    } catch (const Error& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

}  // namespace

Dataset parse_dataset(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("dataset: ") + e.what());
    }
    Dataset ds;
    ds.feature_dim = as_count(field(doc, "feature_dim", "dataset"), "dataset.feature_dim");
    const json& jg = field(doc, "graphs", "dataset");
    if (!jg.is_array()) throw ParseError("dataset.graphs: expected an array");
    if (jg.empty()) throw ValidationError("dataset has no graphs");
    ds.graphs.reserve(jg.size());
    for (std::size_t i = 0; i < jg.size(); ++i) {
        ds.graphs.push_back(parse_graph(jg[i], ds.feature_dim, "dataset.graphs[" + std::to_string(i) + "]"));
    }
    if (auto it = doc.find("graph_labels"); it != doc.end()) {
        ds.graph_labels = as_labels(*it, "dataset.graph_labels");
    }
    ds.validate();
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open dataset file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str());
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    json doc;
    doc["feature_dim"] = dataset.feature_dim;
    json graphs = json::array();
    for (const Graph& g : dataset.graphs) {
        json jg;
        jg["num_nodes"] = g.num_nodes();
        json edges = json::array();
        for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
        jg["edges"] = std::move(edges);
        json feats = json::array();
        for (std::size_t r = 0; r < g.num_nodes(); ++r) {
            feats.push_back(std::vector<double>(g.features().row(r).begin(), g.features().row(r).end()));
        }
        jg["features"] = std::move(feats);
        jg["node_labels"] = g.node_labels() ? json(*g.node_labels()) : json(nullptr);
        graphs.push_back(std::move(jg));
    }
    doc["graphs"] = std::move(graphs);
    doc["graph_labels"] = dataset.graph_labels ? json(*dataset.graph_labels) : json(nullptr);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write dataset file " + path.string());
    out << doc.dump();
    if (!out) throw Error("write failed for " + path.string());
}

Graph disjoint_union(const Dataset& dataset) {
    if (dataset.graphs.empty()) throw ValidationError("dataset has no graphs");
    if (dataset.graphs.size() == 1) return dataset.graphs[0];
    const std::size_t total = dataset.total_nodes();
    Matrix x(total, dataset.feature_dim);
    std::vector<Edge> edges;
    std::vector<ClassId> labels;
    bool labeled = true;
    std::size_t offset = 0;
    for (const Graph& g : dataset.graphs) {
        for (const auto& [u, v] : g.edges()) {
            edges.emplace_back(static_cast<NodeId>(u + offset), static_cast<NodeId>(v + offset));
        }
        std::copy(g.features().values().begin(), g.features().values().end(),
                  x.values().begin() + static_cast<std::ptrdiff_t>(offset * dataset.feature_dim));
        if (g.node_labels()) {
            labels.insert(labels.end(), g.node_labels()->begin(), g.node_labels()->end());
        } else {
            labeled = false;
        }
        offset += g.num_nodes();
    }
    std::optional<std::vector<ClassId>> node_labels;
    if (labeled) node_labels = std::move(labels);
    return Graph(total, std::move(edges), std::move(x), std::move(node_labels));
}

std::vector<std::vector<NodeId>> union_membership(const Dataset& dataset) {
    std::vector<std::vector<NodeId>> members;
    NodeId offset = 0;
    for (const Graph& g : dataset.graphs) {
        std::vector<NodeId> ids(g.num_nodes());
        for (std::size_t v = 0; v < ids.size(); ++v) ids[v] = offset + static_cast<NodeId>(v);
        offset += static_cast<NodeId>(g.num_nodes());
        members.push_back(std::move(ids));
    }
    return members;
}

Graph merge_graphs(const Dataset& dataset) {
    if (dataset.graphs.empty()) throw ValidationError("dataset has no graphs");
    for (std::size_t i = 0; i < dataset.graphs.size(); ++i) {
        if (!dataset.graphs[i].node_labels()) {
            throw ValidationError("merge_graphs: graph " + std::to_string(i) + " has no node labels");
        }
    }
    return disjoint_union(dataset);
}

CsrMatrix normalize_adjacency(const Graph& g) {
    const std::size_t n = g.num_nodes();
    std::vector<double> deg(n);
    for (std::size_t v = 0; v < n; ++v) deg[v] = 1.0 + static_cast<double>(g.degree(static_cast<NodeId>(v)));
    std::vector<CsrMatrix::Entry> entries;
    entries.reserve(n + 2 * g.num_edges());
    for (std::size_t v = 0; v < n; ++v) {
        entries.push_back({v, v, 1.0 / deg[v]});
        for (NodeId u : g.neighbors(static_cast<NodeId>(v))) {
            entries.push_back({v, u, 1.0 / std::sqrt(deg[v] * deg[u])});
        }
    }
    return CsrMatrix::from_entries(n, n, std::move(entries));
}

Graph drop_edges(const Graph& g, double ratio, Rng& rng) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw DomainError("drop_edges: ratio must lie in [0, 1]");
    const std::size_t m = g.num_edges();
    const auto drop = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(m)));
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    // Partial Fisher-Yates: the first `drop` slots are the removed edges.
    for (std::size_t i = 0; i < drop; ++i) std::swap(order[i], order[i + rng.uniform_index(m - i)]);
    std::vector<char> removed(m, 0);
    for (std::size_t i = 0; i < drop; ++i) removed[order[i]] = 1;
    std::vector<Edge> kept;
    kept.reserve(m - drop);
    for (std::size_t i = 0; i < m; ++i) {
        if (!removed[i]) kept.push_back(g.edges()[i]);
    }
    return Graph(g.num_nodes(), std::move(kept), g.features(), g.node_labels());
}

Graph shuffle_features(const Graph& g, Rng& rng) {
    std::vector<std::size_t> perm(g.num_nodes());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    Matrix x(g.num_nodes(), g.feature_dim());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        std::copy(g.features().row(perm[i]).begin(), g.features().row(perm[i]).end(), x.row(i).begin());
    }
    return Graph(g.num_nodes(), g.edges(), std::move(x), g.node_labels());
}

std::vector<LinkTuple> sample_lp_tuples(const Graph& g, std::size_t count, Rng& rng) {
    const std::size_t n = g.num_nodes();
    if (g.num_edges() == 0) throw ValidationError("sample_lp_tuples: graph has no edges");
    // Anchors need a neighbor and a non-neighbor other than themselves.
    std::vector<NodeId> anchors;
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t d = g.degree(static_cast<NodeId>(v));
        if (d >= 1 && d + 1 < n) anchors.push_back(static_cast<NodeId>(v));
    }
    if (anchors.empty()) throw ValidationError("no negative pairs available");
    std::vector<LinkTuple> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const NodeId v = anchors[rng.uniform_index(anchors.size())];
        const auto& nbrs = g.neighbors(v);
        const NodeId a = nbrs[rng.uniform_index(nbrs.size())];
        const std::size_t non_neighbors = n - 1 - nbrs.size();
        NodeId b = 0;
        if (non_neighbors * 4 >= n) {
            do {
                b = static_cast<NodeId>(rng.uniform_index(n));
            } while (b == v || std::binary_search(nbrs.begin(), nbrs.end(), b));
        } else {
            // Dense neighborhood: pick the k-th non-neighbor directly.
            std::size_t k = rng.uniform_index(non_neighbors);
            for (std::size_t u = 0; u < n; ++u) {
                if (u == v || std::binary_search(nbrs.begin(), nbrs.end(), static_cast<NodeId>(u))) continue;
                if (k-- == 0) {
                    b = static_cast<NodeId>(u);
                    break;
                }
            }
        }
        out.push_back({v, a, b});
    }
    return out;
}

std::vector<NodeId> ego_subgraph(const Graph& g, NodeId v) {
    const auto& nbrs = g.neighbors(v);
    std::vector<NodeId> out(nbrs.begin(), nbrs.end());
    out.insert(std::lower_bound(out.begin(), out.end(), v), v);
    return out;
}

}  // namespace mtgp
