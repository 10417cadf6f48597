#!/usr/bin/env python3
# Copyright (c) 2026, The mtgp Authors
# SPDX-License-Identifier: Apache-2.0
"""Write a synthetic dataset in the mtgp JSON layout.

node: one planted-partition graph with class-correlated binary features.
graph: a collection of small graphs whose class sets edge density and
feature profile.
"""

import argparse
import json

import numpy as np


def planted_partition(rng, nodes, classes, dim, degree, homophily, words):
    labels = rng.integers(0, classes, size=nodes)
    topics = [rng.choice(dim, size=max(words * 4, 8), replace=False) for _ in range(classes)]
    feats = np.zeros((nodes, dim))
    for v in range(nodes):
        own = rng.choice(topics[labels[v]], size=words // 2 + 1, replace=False)
        noise = rng.choice(dim, size=words - len(own), replace=False)
        feats[v, own] = 1.0
        feats[v, noise] = 1.0
    by_class = [np.flatnonzero(labels == c) for c in range(classes)]
    edges = set()
    target = nodes * degree // 2
    while len(edges) < target:
        u = int(rng.integers(nodes))
        if rng.random() < homophily:
            v = int(rng.choice(by_class[labels[u]]))
        else:
            v = int(rng.integers(nodes))
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return {
        "num_nodes": nodes,
        "edges": sorted([u, v] for u, v in edges),
        "features": feats.tolist(),
        "node_labels": labels.tolist(),
    }


def small_graph(rng, label, classes, dim, size):
    p = 0.15 + 0.5 * label / max(classes - 1, 1)
    n = int(rng.integers(size // 2, size + 1))
    edges = [[v, v + 1] for v in range(n - 1)]
    for u in range(n):
        for v in range(u + 2, n):
            if rng.random() < p / 3:
                edges.append([u, v])
    center = np.zeros(dim)
    center[label % dim] = 1.0
    feats = center + 0.8 * rng.standard_normal((n, dim))
    node_labels = rng.integers(0, 3, size=n).tolist()
    return {"num_nodes": n, "edges": edges, "features": feats.round(6).tolist(), "node_labels": node_labels}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("kind", choices=["node", "graph"])
    ap.add_argument("out")
    ap.add_argument("--nodes", type=int, default=2708)
    ap.add_argument("--graphs", type=int, default=600)
    ap.add_argument("--classes", type=int, default=7)
    ap.add_argument("--dim", type=int, default=1433)
    ap.add_argument("--degree", type=int, default=4)
    ap.add_argument("--homophily", type=float, default=0.8)
    ap.add_argument("--words", type=int, default=18)
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    if args.kind == "node":
        g = planted_partition(rng, args.nodes, args.classes, args.dim, args.degree, args.homophily, args.words)
        doc = {"feature_dim": args.dim, "graphs": [g]}
    else:
        labels = rng.integers(0, args.classes, size=args.graphs)
        graphs = [small_graph(rng, int(c), args.classes, args.dim, args.size) for c in labels]
        doc = {"feature_dim": args.dim, "graphs": graphs, "graph_labels": labels.tolist()}
    with open(args.out, "w") as f:
        json.dump(doc, f)


if __name__ == "__main__":
    main()
