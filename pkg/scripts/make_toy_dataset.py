"""Regenerate the bundled datasets under data/.

drift_toy.txt: an 11-snapshot dynamic graph with three communities that grow
from ~20 to ~100 nodes while edges churn smoothly, one timestamp unit per
snapshot. email_format_sample.txt: a small interaction log in the same
`u v t` second-resolution format as public email datasets, spanning a few
monthly windows.
"""

from __future__ import annotations

import os
import random
import sys

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data")

N_SNAPSHOTS = 11
N_START = 20
N_GROWTH = 8
N_COMMUNITIES = 3
P_INTRA = 0.45
P_INTER = 0.015
EDGE_PERSISTENCE = 0.88
SEED = 20240601


def community_of(node: int) -> int:
    return node % N_COMMUNITIES


def sample_edges(rng: random.Random, nodes: list[int]) -> set[tuple[int, int]]:
    edges = set()
    for i, u in enumerate(nodes):
        for v in nodes[i + 1 :]:
            p = P_INTRA if community_of(u) == community_of(v) else P_INTER
            # thin intra-community density as communities grow so degrees stay flat
            size_scale = 14.0 / max(14, len(nodes))
            if rng.random() < p * (size_scale if community_of(u) == community_of(v) else 1.0):
                edges.add((u, v))
    return edges


def connect_components(rng: random.Random, nodes: list[int], edges: set[tuple[int, int]]) -> None:
    parent = {v: v for v in nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in edges:
        parent[find(u)] = find(v)
    roots = sorted({find(v) for v in nodes})
    for a, b in zip(roots, roots[1:]):
        edges.add((min(a, b), max(a, b)))
        parent[find(a)] = find(b)


def make_drift(path: str) -> None:
    rng = random.Random(SEED)
    lines = []
    prev_edges: set[tuple[int, int]] = set()
    for t in range(N_SNAPSHOTS):
        nodes = list(range(N_START + N_GROWTH * t))
        fresh = sample_edges(rng, nodes)
        kept = {e for e in prev_edges if rng.random() < EDGE_PERSISTENCE}
        edges = kept | fresh
        connect_components(rng, nodes, edges)
        prev_edges = edges
        for u, v in sorted(edges):
            lines.append(f"n{u} n{v} {t}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# synthetic drifting-community dynamic graph; one unit per snapshot\n")
        fh.write("\n".join(lines) + "\n")


MONTH = 2_592_000


def make_email_sample(path: str) -> None:
    rng = random.Random(SEED + 1)
    users = [str(i) for i in range(40)]
    lines = []
    t = 0
    for _ in range(420):
        t += rng.randrange(1, MONTH // 90)
        u, v = rng.sample(users, 2)
        if rng.random() < 0.02:
            v = u  # occasional self-send, as real logs contain
        lines.append(f"{u} {v} {t}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def main() -> int:
    os.makedirs(DATA_DIR, exist_ok=True)
    make_drift(os.path.join(DATA_DIR, "drift_toy.txt"))
    make_email_sample(os.path.join(DATA_DIR, "email_format_sample.txt"))
    print(f"wrote datasets under {os.path.abspath(DATA_DIR)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
