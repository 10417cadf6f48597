#!/usr/bin/env python3
# Copyright (c) 2026, The mtgp Authors
# SPDX-License-Identifier: Apache-2.0
"""Convert a Planetoid citation dataset (ind.<name>.* files) to mtgp JSON.

Features are written as stored (binary bag-of-words for Cora). Test rows are
put back in their original order; citeseer-style gaps in the test index get
zero features and label 0.
"""

import argparse
import json
import os
import pickle
import sys

import numpy as np
import scipy.sparse as sp


def load(raw, name, part):
    path = os.path.join(raw, f"ind.{name}.{part}")
    if part == "test.index":
        with open(path) as f:
            return [int(line) for line in f if line.strip()]
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("raw", help="directory holding ind.<name>.x, tx, allx, y, ty, ally, graph, test.index")
    ap.add_argument("out")
    ap.add_argument("--name", default="cora")
    args = ap.parse_args()

    x, tx, allx, y, ty, ally, graph = (load(args.raw, args.name, p) for p in ("x", "tx", "allx", "y", "ty", "ally", "graph"))
    del x, y
    test_index = load(args.raw, args.name, "test.index")
    lo, hi = min(test_index), max(test_index)

    tx = sp.csr_matrix(tx)
    if hi - lo + 1 != tx.shape[0]:
        full = sp.lil_matrix((hi - lo + 1, tx.shape[1]))
        full[sorted(test_index) - np.int64(lo), :] = tx
        tx = full.tocsr()
        full_y = np.zeros((hi - lo + 1, ty.shape[1]))
        full_y[sorted(test_index) - np.int64(lo), :] = ty
        ty = full_y

    features = sp.vstack([sp.csr_matrix(allx), tx]).tolil()
    labels = np.vstack([ally, ty])
    order = np.sort(test_index)
    features[test_index, :] = features[order, :]
    labels[test_index, :] = labels[order, :]

    n = features.shape[0]
    edges = set()
    for u, targets in graph.items():
        for v in targets:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    dense = features.toarray()
    doc = {
        "feature_dim": int(dense.shape[1]),
        "graphs": [{
            "num_nodes": int(n),
            "edges": [list(e) for e in sorted(edges)],
            "features": [[float(v) for v in row] for row in dense],
            "node_labels": [int(c) for c in labels.argmax(axis=1)],
        }],
    }
    with open(args.out, "w") as f:
        json.dump(doc, f, separators=(",", ":"))
    print(f"{args.name}: {n} nodes, {len(edges)} edges, {dense.shape[1]} features", file=sys.stderr)


if __name__ == "__main__":
    main()
