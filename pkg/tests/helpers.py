"""Shared graph builders and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
import random

from dyngram.graphs import LabeledMultigraph


def random_connected_graph(rng: random.Random, n: int, extra_edges: int | None = None) -> LabeledMultigraph:
    """Random-tree backbone plus extra edges; connected by construction."""
    g = LabeledMultigraph()
    if n == 1:
        g.add_node(0)
        return g
    for i in range(1, n):
        g.add_edge(i, rng.randrange(i))
    extra = extra_edges if extra_edges is not None else n // 2
    for _ in range(extra):
        a, b = rng.sample(range(n), 2)
        if not g.has_edge(a, b):
            g.add_edge(a, b)
    return g


def random_snapshot_pair(
    rng: random.Random, n: int, max_changes: int = 5
) -> tuple[LabeledMultigraph, LabeledMultigraph]:
    """A connected graph and a small perturbation of it (edge churn, arrivals)."""
    g = random_connected_graph(rng, n)
    h = g.copy()
    for _ in range(rng.randrange(1, max_changes + 1)):
        roll = rng.random()
        edges = h.edges()
        if roll < 0.35 and len(edges) > 1:
            u, v, _ = edges[rng.randrange(len(edges))]
            h.remove_edge(u, v)
            for w in (u, v):
                if h.has_node(w) and h.degree(w) == 0:
                    h.remove_node(w)
        elif roll < 0.7:
            if h.node_count >= 2:
                a, b = rng.sample(h.nodes(), 2)
                if not h.has_edge(a, b):
                    h.add_edge(a, b)
        elif roll < 0.9:
            fresh = n + rng.randrange(1000)
            if not h.has_node(fresh) and h.node_count:
                anchor = h.nodes()[rng.randrange(h.node_count)]
                h.add_edge(fresh, anchor)
        else:
            f1, f2 = n + 1000 + rng.randrange(500), n + 2000 + rng.randrange(500)
            if not h.has_node(f1) and not h.has_node(f2):
                h.add_edge(f1, f2)
    if h.node_count == 0:
        h.add_edge(0, 1)
    return g, h


def graph_from_edges(edges, nodes=()) -> LabeledMultigraph:
    g = LabeledMultigraph()
    for v in nodes:
        g.add_node(v)
    for e in edges:
        if len(e) == 3:
            g.add_edge(e[0], e[1], e[2])
        else:
            g.add_edge(*e)
    return g


def all_labeled_graphs(n: int, labels: tuple = (None, 0, 1)):
    """Every simple labeled graph on exactly n nodes over the label alphabet."""
    pairs = list(itertools.combinations(range(n), 2))
    for labeling in itertools.product(labels, repeat=n):
        for bits in itertools.product((0, 1), repeat=len(pairs)):
            g = LabeledMultigraph()
            for v in range(n):
                g.add_node(v, labeling[v])
            for (a, b), bit in zip(pairs, bits):
                if bit:
                    g.add_edge(a, b)
            yield g


def brute_force_ged(ga, gb, lhs_a=0, lhs_b=0) -> float:
    """Exhaustive minimum edit cost over all injective partial matchings."""
    a_nodes = ga.nodes()
    b_nodes = gb.nodes()
    best = None
    for k in range(min(len(a_nodes), len(b_nodes)) + 1):
        for kept in itertools.combinations(a_nodes, k):
            for image in itertools.permutations(b_nodes, k):
                phi = dict(zip(kept, image))
                cost = (len(a_nodes) - k) + (len(b_nodes) - k)
                cost += sum(1 for u in kept if ga.label(u) != gb.label(phi[u]))
                for i, u in enumerate(a_nodes):
                    for u2 in a_nodes[i:]:
                        w = ga.multiplicity(u, u2)
                        if u in phi and u2 in phi:
                            cost += abs(w - gb.multiplicity(phi[u], phi[u2]))
                        else:
                            cost += w
                mapped = set(phi.values())
                for i, v in enumerate(b_nodes):
                    for v2 in b_nodes[i:]:
                        if v in mapped and v2 in mapped:
                            continue
                        cost += gb.multiplicity(v, v2)
                if best is None or cost < best:
                    best = cost
    return best + 0.5 * abs(lhs_a - lhs_b)


def all_partitions(items: list):
    """Every set partition of the item list (Bell-number enumeration)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in all_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part
