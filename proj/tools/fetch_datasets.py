#!/usr/bin/env python3
"""Download the Planetoid citation graphs and write them as edge lists.

Usage: tools/fetch_datasets.py [--out data] [--only cora citeseer pubmed]

Each graph is written to <out>/<name>.txt with one undirected edge "u v" per
line, vertex ids as in the Planetoid index files. Duplicate edges and self
loops are left in; the loader drops them.
"""

import argparse
import pathlib
import pickle
import sys
import urllib.request

BASE = "https://github.com/kimiyoung/planetoid/raw/master/data/ind.{name}.graph"
NAMES = ("cora", "citeseer", "pubmed")


def fetch_graph(name):
    with urllib.request.urlopen(BASE.format(name=name), timeout=60) as resp:
        payload = resp.read()
    # The files are Python 2 pickles of {vertex: [neighbors]}.
    return pickle.loads(payload, encoding="latin1")


def write_edges(adjacency, path):
    edges = set()
    for u, neighbors in adjacency.items():
        for v in neighbors:
            edges.add((min(u, v), max(u, v)))
    with open(path, "w") as out:
        out.write("# planetoid adjacency, undirected\n")
        for u, v in sorted(edges):
            out.write(f"{u} {v}\n")
    return len(edges)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data", type=pathlib.Path)
    parser.add_argument("--only", nargs="+", choices=NAMES, default=list(NAMES))
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.only:
        path = args.out / f"{name}.txt"
        try:
            count = write_edges(fetch_graph(name), path)
        except OSError as e:
            print(f"{name}: download failed: {e}", file=sys.stderr)
            return 1
        print(f"{name}: {count} edges -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
