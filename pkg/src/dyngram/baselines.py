"""Random-graph baselines and graph-similarity metrics for the evaluation harness."""

from __future__ import annotations

import math
import random
from typing import Sequence

import numpy as np

from .graphs import LabeledMultigraph, Node

EIGENVALUE_TOLERANCE = 1e-9


def er_generate(
    n: int, m: int, seed: int = 0, nodes: Sequence[Node] | None = None
) -> LabeledMultigraph:
    """Gilbert-style random graph with p = 2m / (n(n-1)), clamped to [0, 1].

    `nodes` optionally names the vertex set (defaults to range(n)); isolated
    vertices stay in the graph.
    """
    if n < 1:
        raise ValueError("need at least one node")
    ids = list(nodes) if nodes is not None else list(range(n))
    if len(ids) != n:
        raise ValueError("node id list does not match n")
    p = 0.0 if n == 1 else min(1.0, 2 * m / (n * (n - 1)))
    rng = random.Random(seed)
    g = LabeledMultigraph()
    for v in ids:
        g.add_node(v)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                g.add_edge(ids[i], ids[j])
    return g


def chung_lu_generate(
    degrees: Sequence[int], seed: int = 0, nodes: Sequence[Node] | None = None
) -> LabeledMultigraph:
    """Random graph whose expected degrees approximate the given sequence.

    Pair (u, v) appears with probability min(1, d_u d_v / sum(d)).
    """
    total = sum(degrees)
    if total <= 0:
        raise ValueError("degree sequence must have positive total")
    ids = list(nodes) if nodes is not None else list(range(len(degrees)))
    if len(ids) != len(degrees):
        raise ValueError("node id list does not match the degree sequence")
    rng = random.Random(seed)
    g = LabeledMultigraph()
    for v in ids:
        g.add_node(v)
    n = len(ids)
    for i in range(n):
        if not degrees[i]:
            continue
        for j in range(i + 1, n):
            p = min(1.0, degrees[i] * degrees[j] / total)
            if p and rng.random() < p:
                g.add_edge(ids[i], ids[j])
    return g


# ---------------------------------------------------------------------------
# portrait divergence
# ---------------------------------------------------------------------------


def portrait(g: LabeledMultigraph) -> np.ndarray:
    """Matrix B with B[l][k] = number of nodes having k nodes at distance l.

    Rows run from l = 0 to the graph diameter; every row sums to n.
    """
    if g.node_count == 0:
        raise ValueError("portrait of an empty graph is undefined")
    nodes = g.nodes()
    n = len(nodes)
    per_node: list[dict[int, int]] = []
    diameter = 0
    for s in nodes:
        dist = {s: 0}
        frontier = [s]
        d = 0
        counts = {0: 1}
        while frontier:
            d += 1
            nxt = []
            for v in frontier:
                for u in g.neighbors(v):
                    if u not in dist:
                        dist[u] = d
                        nxt.append(u)
            if nxt:
                counts[d] = len(nxt)
                diameter = max(diameter, d)
            frontier = nxt
        per_node.append(counts)
    b = np.zeros((diameter + 1, n + 1), dtype=np.int64)
    for counts in per_node:
        for l in range(diameter + 1):
            b[l][counts.get(l, 0)] += 1
    if not (b.sum(axis=1) == n).all():
        raise AssertionError("portrait row sums must equal the node count")
    return b


def _portrait_distribution(b: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    padded = np.zeros(shape, dtype=float)
    padded[: b.shape[0], : b.shape[1]] = b
    k = np.arange(shape[1], dtype=float)
    weighted = padded * k[np.newaxis, :]
    total = weighted.sum()
    return weighted.flatten() / total


def _kl_bits(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def portrait_divergence(a: LabeledMultigraph, b: LabeledMultigraph) -> float:
    """Jensen-Shannon divergence (base 2) between the two graphs' portraits.

    Portraits are compared through the pair-weighted distance-count
    distribution P(l, k) proportional to k * B[l][k]; the result lies in
    [0, 1] and is 0 for identical portraits.
    """
    ba, bb = portrait(a), portrait(b)
    shape = (max(ba.shape[0], bb.shape[0]), max(ba.shape[1], bb.shape[1]))
    p = _portrait_distribution(ba, shape)
    q = _portrait_distribution(bb, shape)
    m = 0.5 * (p + q)
    return 0.5 * _kl_bits(p, m) + 0.5 * _kl_bits(q, m)


# ---------------------------------------------------------------------------
# Laplacian-spectrum MMD
# ---------------------------------------------------------------------------


def laplacian_spectrum(g: LabeledMultigraph) -> np.ndarray:
    """Ascending eigenvalues of the normalized Laplacian; all within [0, 2]."""
    if g.node_count == 0:
        raise ValueError("spectrum of an empty graph is undefined")
    nodes = g.nodes()
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    adj = np.zeros((n, n), dtype=float)
    for u, v, m in g.edges():
        adj[index[u], index[v]] = m
        adj[index[v], index[u]] = m
    deg = adj.sum(axis=1)
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    lap = np.eye(n) - inv_sqrt[:, None] * adj * inv_sqrt[None, :]
    for i in range(n):
        if deg[i] == 0:
            lap[i, i] = 0.0
    eig = np.linalg.eigvalsh(lap)
    eig.sort()
    if eig[0] < -EIGENVALUE_TOLERANCE or eig[-1] > 2 + EIGENVALUE_TOLERANCE:
        raise AssertionError(f"normalized Laplacian eigenvalues out of [0, 2]: {eig}")
    return eig


def _gaussian_kernel_mean(x: np.ndarray, y: np.ndarray, bandwidth: float) -> float:
    diff = x[:, None] - y[None, :]
    return float(np.mean(np.exp(-(diff**2) / (2.0 * bandwidth**2))))


def spectrum_mmd(a: LabeledMultigraph, b: LabeledMultigraph) -> float:
    """Squared MMD between normalized-Laplacian spectra, in [0, 2].

    Gaussian kernel with the median pairwise-distance bandwidth heuristic,
    biased (v-statistic) estimator; 0 for identical spectra.
    """
    x, y = laplacian_spectrum(a), laplacian_spectrum(b)
    combined = np.concatenate([x, y])
    pair_dists = np.abs(combined[:, None] - combined[None, :])
    upper = pair_dists[np.triu_indices_from(pair_dists, k=1)]
    positive = upper[upper > 0]
    bandwidth = float(np.median(positive)) if positive.size else 1.0
    mmd2 = (
        _gaussian_kernel_mean(x, x, bandwidth)
        + _gaussian_kernel_mean(y, y, bandwidth)
        - 2.0 * _gaussian_kernel_mean(x, y, bandwidth)
    )
    return max(0.0, mmd2)


def degree_sequence(g: LabeledMultigraph) -> list[int]:
    """Simple-graph degrees (multiplicity ignored), in node order."""
    return [len([u for u in g.neighbors(v)]) for v in g.nodes()]
