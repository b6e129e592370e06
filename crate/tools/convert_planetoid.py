#!/usr/bin/env python3
"""Convert the public Cora / Citeseer / Pubmed distributions into the TSV
layout read by `p2pgnn` (nodes.tsv, edges.tsv, splits.tsv).

Two source layouts are understood:

* planetoid pickles (`ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}`),
  converted with the usual public train/valid/test split
  (train = first len(y) nodes, valid = next 500, test = test.index);
* the raw LINQS Cora release (`cora.content`, `cora.cites`), for which a
  planetoid-shaped split (20 per class / 500 / 1000) is drawn with a fixed seed.

Features are row-normalized (sum to one) unless --raw-features is given, which
matches the preprocessed distributions most GNN work uses.

Usage:
    convert_planetoid.py planetoid <dir> <name> <out_dir> [--gzip]
    convert_planetoid.py cora-raw <dir> <out_dir> [--gzip] [--seed N]
"""
import argparse
import gzip
import os
import pickle
import sys

import numpy as np


def _open(path, gz):
    if gz:
        return gzip.open(path + ".gz", "wt", encoding="utf-8", compresslevel=9)
    return open(path, "w", encoding="utf-8")


def _fmt(v):
    if v == 0:
        return "0"
    if float(v).is_integer():
        return str(int(v))
    return "%.8g" % float(v)


def write_dataset(out_dir, features, labels, edges, splits, gz, normalize):
    os.makedirs(out_dir, exist_ok=True)
    features = np.asarray(features, dtype=np.float64)
    if normalize:
        sums = features.sum(axis=1, keepdims=True)
        sums[sums == 0] = 1.0
        features = features / sums
    n = features.shape[0]
    with _open(os.path.join(out_dir, "nodes.tsv"), gz) as f:
        for u in range(n):
            row = ",".join(_fmt(v) for v in features[u])
            label = "" if labels[u] is None else str(labels[u])
            f.write(f"{u}\t{row}\t{label}\n")
    seen = set()
    with _open(os.path.join(out_dir, "edges.tsv"), gz) as f:
        for u, v in edges:
            if u == v:
                continue
            key = (min(u, v), max(u, v))
            if key in seen:
                continue
            seen.add(key)
            f.write(f"{key[0]}\t{key[1]}\n")
    with open(os.path.join(out_dir, "splits.tsv"), "w", encoding="utf-8") as f:
        for name in ("train", "valid", "test"):
            for u in sorted(splits[name]):
                f.write(f"{u}\t{name}\n")
    print(
        f"{out_dir}: N={n} F={features.shape[1]} undirected_edges={len(seen)} "
        f"train={len(splits['train'])} valid={len(splits['valid'])} test={len(splits['test'])}",
        file=sys.stderr,
    )


def _load_pickle(path):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def _dense(m):
    return np.asarray(m.todense()) if hasattr(m, "todense") else np.asarray(m)


def convert_planetoid(src, name, out_dir, gz, normalize):
    obj = {}
    for key in ("x", "y", "tx", "ty", "allx", "ally", "graph"):
        obj[key] = _load_pickle(os.path.join(src, f"ind.{name}.{key}"))
    with open(os.path.join(src, f"ind.{name}.test.index")) as f:
        test_idx_reorder = [int(line) for line in f if line.strip()]
    test_idx_range = np.sort(test_idx_reorder)

    tx, ty = _dense(obj["tx"]), np.asarray(obj["ty"])
    if name == "citeseer":
        # isolated test nodes are missing from tx/ty; pad them with zeros
        full = range(min(test_idx_reorder), max(test_idx_reorder) + 1)
        tx_ext = np.zeros((len(full), tx.shape[1]))
        tx_ext[test_idx_range - min(test_idx_range), :] = tx
        ty_ext = np.zeros((len(full), ty.shape[1]))
        ty_ext[test_idx_range - min(test_idx_range), :] = ty
        tx, ty = tx_ext, ty_ext

    features = np.vstack((_dense(obj["allx"]), tx))
    features[test_idx_reorder, :] = features[test_idx_range, :]
    onehot = np.vstack((np.asarray(obj["ally"]), ty))
    onehot[test_idx_reorder, :] = onehot[test_idx_range, :]
    labels = [int(np.argmax(r)) if r.sum() > 0 else None for r in onehot]

    n = features.shape[0]
    edges = []
    for u, nbrs in obj["graph"].items():
        for v in nbrs:
            if u < n and v < n:
                edges.append((int(u), int(v)))

    n_train = len(obj["y"])
    splits = {
        "train": list(range(n_train)),
        "valid": list(range(n_train, n_train + 500)),
        "test": [int(u) for u in test_idx_range],
    }
    write_dataset(out_dir, features, labels, edges, splits, gz, normalize)


def convert_cora_raw(src, out_dir, gz, seed, normalize):
    ids, feats, classes = [], [], []
    with open(os.path.join(src, "cora.content")) as f:
        for line in f:
            parts = line.rstrip("\n").split("\t")
            ids.append(parts[0])
            feats.append([float(v) for v in parts[1:-1]])
            classes.append(parts[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    names = sorted(set(classes))
    labels = [names.index(c) for c in classes]
    edges = []
    with open(os.path.join(src, "cora.cites")) as f:
        for line in f:
            a, b = line.split()
            if a in index and b in index:
                edges.append((index[b], index[a]))

    rng = np.random.RandomState(seed)
    order = rng.permutation(len(ids))
    per_class = {c: 0 for c in range(len(names))}
    train, rest = [], []
    for u in order:
        if per_class[labels[u]] < 20:
            per_class[labels[u]] += 1
            train.append(int(u))
        else:
            rest.append(int(u))
    splits = {"train": train, "valid": rest[:500], "test": rest[500:1500]}
    write_dataset(out_dir, feats, labels, edges, splits, gz, normalize)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("planetoid")
    p.add_argument("src")
    p.add_argument("name", choices=["cora", "citeseer", "pubmed"])
    p.add_argument("out")
    c = sub.add_parser("cora-raw")
    c.add_argument("src")
    c.add_argument("out")
    c.add_argument("--seed", type=int, default=0)
    for sp in (p, c):
        sp.add_argument("--gzip", action="store_true")
        sp.add_argument("--raw-features", action="store_true")
    args = ap.parse_args()
    if args.cmd == "planetoid":
        convert_planetoid(args.src, args.name, args.out, args.gzip, not args.raw_features)
    else:
        convert_cora_raw(args.src, args.out, args.gzip, args.seed, not args.raw_features)


if __name__ == "__main__":
    main()
