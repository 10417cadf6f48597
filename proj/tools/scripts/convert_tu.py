#!/usr/bin/env python3
# Copyright (c) 2026, The mtgp Authors
# SPDX-License-Identifier: Apache-2.0
"""Convert a TU graph-classification dataset (<DS>_A.txt etc.) to mtgp JSON.

Node features: continuous node attributes when present, otherwise one-hot
node labels (--features picks explicitly). Graph labels are remapped to
0..C-1 in sorted order. Node labels become the per-node labels.
"""

import argparse
import json
import os
import sys

import numpy as np


def read(raw, ds, part, dtype=int, required=True):
    path = os.path.join(raw, f"{ds}_{part}.txt")
    if not os.path.exists(path):
        if required:
            sys.exit(f"missing {path}")
        return None
    return np.loadtxt(path, delimiter=",", dtype=dtype, ndmin=1 if dtype is int else 2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("raw", help="directory holding <DS>_A.txt, _graph_indicator.txt, _graph_labels.txt, ...")
    ap.add_argument("out")
    ap.add_argument("--name", required=True, help="dataset prefix, e.g. ENZYMES")
    ap.add_argument("--features", choices=["auto", "attributes", "labels", "both"], default="auto")
    args = ap.parse_args()

    ds = args.name
    indicator = read(args.raw, ds, "graph_indicator") - 1
    graph_labels = read(args.raw, ds, "graph_labels")
    edges = np.loadtxt(os.path.join(args.raw, f"{ds}_A.txt"), delimiter=",", dtype=int, ndmin=2) - 1
    node_labels = read(args.raw, ds, "node_labels", required=False)
    attributes = read(args.raw, ds, "node_attributes", dtype=float, required=False)

    mode = args.features
    if mode == "auto":
        mode = "attributes" if attributes is not None else "labels"
    parts = []
    if mode in ("attributes", "both"):
        if attributes is None:
            sys.exit(f"{ds} has no node attributes")
        parts.append(attributes)
    if mode in ("labels", "both"):
        if node_labels is None:
            sys.exit(f"{ds} has no node labels")
        values = np.unique(node_labels)
        parts.append((node_labels[:, None] == values[None, :]).astype(float))
    features = np.hstack(parts)

    classes = {c: i for i, c in enumerate(sorted(set(graph_labels.tolist())))}
    count = int(indicator.max()) + 1
    members = [np.flatnonzero(indicator == g) for g in range(count)]
    local = np.empty(len(indicator), dtype=int)
    for nodes in members:
        local[nodes] = np.arange(len(nodes))

    per_graph = [set() for _ in range(count)]
    for u, v in edges:
        if u != v:
            per_graph[indicator[u]].add((min(local[u], local[v]), max(local[u], local[v])))

    graphs = []
    for g, nodes in enumerate(members):
        entry = {
            "num_nodes": int(len(nodes)),
            "edges": [[int(a), int(b)] for a, b in sorted(per_graph[g])],
            "features": [[float(x) for x in features[v]] for v in nodes],
        }
        if node_labels is not None:
            entry["node_labels"] = [int(c) for c in node_labels[nodes] - node_labels.min()]
        graphs.append(entry)

    doc = {
        "feature_dim": int(features.shape[1]),
        "graphs": graphs,
        "graph_labels": [classes[c] for c in graph_labels.tolist()],
    }
    with open(args.out, "w") as f:
        json.dump(doc, f, separators=(",", ":"))
    avg = len(indicator) / count
    print(f"{ds}: {count} graphs, {avg:.2f} avg nodes, {features.shape[1]} features ({mode})", file=sys.stderr)


if __name__ == "__main__":
    main()
