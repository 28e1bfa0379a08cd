"""Hierarchical modularity clustering and the filtration machinery built on it.

The clusterer follows the local-moving / refinement / aggregation scheme with
standard modularity (resolution 1.0) as the quality function, iterated until
no aggregation level changes. All tie-breaking is deterministic and move
order is a seeded shuffle, so identical (graph, seed) inputs yield identical
dendrograms.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graphs import LabeledMultigraph, Node, _sort_key, connected_components, is_connected

MAX_LOCAL_MOVE_PASSES = 200


@dataclass(frozen=True)
class Filtration:
    """Sequence of node partitions, finest first, each refining the next.

    Every level is a list of disjoint covers whose union is the node set;
    the final level is the single full-set cover.
    """

    levels: tuple[tuple[frozenset, ...], ...]

    def validate(self) -> None:
        if not self.levels:
            raise ValueError("filtration has no levels")
        universe = frozenset().union(*self.levels[0])
        for i, level in enumerate(self.levels):
            covered: set = set()
            for cover in level:
                if covered & cover:
                    raise ValueError(f"level {i} covers overlap")
                covered |= cover
            if covered != universe:
                raise ValueError(f"level {i} is not a partition of the node set")
        for i in range(len(self.levels) - 1):
            uppers = list(self.levels[i + 1])
            for cover in self.levels[i]:
                if sum(1 for up in uppers if cover <= up) != 1:
                    raise ValueError(f"level {i} does not refine level {i + 1}")
        if len(self.levels[-1]) != 1:
            raise ValueError("final level is not the full-set cover")

    @property
    def node_set(self) -> frozenset:
        return frozenset().union(*self.levels[-1])


@dataclass(frozen=True)
class DendroNode:
    """Rooted-tree vertex; a leaf covers one node, internals cover unions."""

    members: frozenset
    children: tuple["DendroNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Dendrogram:
    root: DendroNode

    def leaves(self) -> list[Node]:
        return sorted(self.root.members, key=_sort_key)

    def depth(self) -> int:
        def d(node: DendroNode) -> int:
            return 0 if node.is_leaf else 1 + max(d(c) for c in node.children)

        return d(self.root)

    def to_newick(self, name_of=str) -> str:
        """Nested parenthesized leaf names, for debugging and fixtures."""

        def render(node: DendroNode) -> str:
            if node.is_leaf:
                (v,) = node.members
                return name_of(v)
            return "(" + ",".join(render(c) for c in node.children) + ")"

        return render(self.root)


def _leaf(v: Node) -> DendroNode:
    return DendroNode(members=frozenset([v]))


def modularity(g: LabeledMultigraph, partition: list[set]) -> float:
    """Standard (resolution-1) modularity of a node partition."""
    m = g.unit_size
    if m == 0:
        return 0.0
    q = 0.0
    for cover in partition:
        internal = 0
        tot = 0
        for v in cover:
            tot += g.degree(v)
            for u, w in g._adj[v].items():
                if u == v:
                    internal += 2 * w
                elif u in cover:
                    internal += w
        q += internal / (2 * m) - (tot / (2 * m)) ** 2
    return q


def _local_move(g: LabeledMultigraph, rng: random.Random) -> dict[Node, int]:
    """One level of modularity-maximizing local moves; returns community ids.

    Community ids are the least member under the deterministic sort order,
    which is also the tie-break between equal-gain targets.
    """
    nodes = g.nodes()
    m = g.unit_size
    if m == 0:
        return {v: i for i, v in enumerate(nodes)}
    deg = {v: g.degree(v) for v in nodes}
    comm = {v: i for i, v in enumerate(nodes)}
    members: dict[int, set] = {i: {v} for i, v in enumerate(nodes)}
    tot = {i: deg[v] for i, v in enumerate(nodes)}

    order = list(nodes)
    rng.shuffle(order)
    two_m_sq = 2.0 * m * m
    for _ in range(MAX_LOCAL_MOVE_PASSES):
        moved = False
        for v in order:
            c_old = comm[v]
            members[c_old].discard(v)
            tot[c_old] -= deg[v]
            # multiplicity-weighted links from v into each neighboring community
            w_to: dict[int, int] = {}
            for u, w in g._adj[v].items():
                if u == v:
                    continue
                w_to[comm[u]] = w_to.get(comm[u], 0) + w
            best_c, best_gain, best_key = c_old, 0.0, None
            for c, w in sorted(w_to.items()):
                gain = w / m - deg[v] * tot[c] / two_m_sq
                key = min(members[c], key=_sort_key) if members[c] else None
                if gain > best_gain + 1e-12 or (
                    abs(gain - best_gain) <= 1e-12
                    and best_key is not None
                    and key is not None
                    and _sort_key(key) < _sort_key(best_key)
                ):
                    best_c, best_gain, best_key = c, gain, key
            if best_gain <= 1e-12:
                best_c = c_old
            members[best_c].add(v)
            tot[best_c] += deg[v]
            if best_c != c_old:
                comm[v] = best_c
                moved = True
        if not moved:
            break
    return comm


def _refine_connected(g: LabeledMultigraph, comm: dict[Node, int]) -> list[list[Node]]:
    """Split each community into connected pieces (refinement step)."""
    groups: dict[int, list[Node]] = {}
    for v, c in comm.items():
        groups.setdefault(c, []).append(v)
    covers = []
    for c in sorted(groups):
        sub = g.induced(groups[c])
        covers.extend(connected_components(sub))
    covers.sort(key=lambda cov: _sort_key(cov[0]))
    return covers


def hierarchical_cluster(g: LabeledMultigraph, seed: int = 0) -> Dendrogram:
    """Cluster a connected graph into a dendrogram with leaves = V(g)."""
    if g.node_count == 0:
        raise ValueError("cannot cluster an empty graph")
    if not is_connected(g):
        raise ValueError("cannot cluster a disconnected graph; split components first")
    if g.node_count == 1:
        return Dendrogram(root=_leaf(g.nodes()[0]))

    rng = random.Random(seed)
    units: dict[Node, DendroNode] = {v: _leaf(v) for v in g.nodes()}
    work = g.copy()

    while work.node_count > 1:
        comm = _local_move(work, rng)
        covers = _refine_connected(work, comm)
        if len(covers) == work.node_count:
            break  # no aggregation level changes: stop
        # fold each multi-unit cover into a new dendrogram vertex (singletons elide)
        new_units: dict[Node, DendroNode] = {}
        aggregated = LabeledMultigraph()
        rep_of: dict[Node, Node] = {}
        for cover in covers:
            rep = min(cover, key=_sort_key)
            for v in cover:
                rep_of[v] = rep
            if len(cover) == 1:
                new_units[rep] = units[cover[0]]
            else:
                children = tuple(units[v] for v in cover)
                merged = frozenset().union(*(c.members for c in children))
                new_units[rep] = DendroNode(members=merged, children=children)
        for v in work.nodes():
            if rep_of[v] not in aggregated._adj:
                aggregated.add_node(rep_of[v])
        for u, v, w in work.edges():
            ru, rv = rep_of[u], rep_of[v]
            if ru == rv and u != v:
                aggregated.add_edge(ru, ru, w)  # internal weight becomes a loop
            else:
                aggregated.add_edge(ru, rv, w)
        units = new_units
        work = aggregated

    tops = sorted(units.values(), key=lambda n: _sort_key(min(n.members, key=_sort_key)))
    root = tops[0] if len(tops) == 1 else DendroNode(
        members=frozenset().union(*(t.members for t in tops)), children=tuple(tops)
    )
    return Dendrogram(root=root)


def dendrogram_to_filtration(dendro: Dendrogram) -> Filtration:
    """Cut the tree level by level, padding shallow branches downward.

    Level k holds the covers at tree depth (max_depth - k); leaves above
    that depth persist. Consecutive identical levels collapse so adjacent
    levels always differ.
    """
    depths: dict[int, list[tuple[DendroNode, int]]] = {}

    def walk(node: DendroNode, depth: int) -> None:
        depths.setdefault(depth, []).append((node, depth))
        for c in node.children:
            walk(c, depth + 1)

    walk(dendro.root, 0)
    max_depth = max(depths)

    levels: list[tuple[frozenset, ...]] = []
    for cut in range(max_depth, -1, -1):
        covers = []

        def collect(node: DendroNode, depth: int) -> None:
            if depth == cut or node.is_leaf and depth < cut:
                covers.append(node.members)
                return
            for c in node.children:
                collect(c, depth + 1)

        collect(dendro.root, 0)
        covers.sort(key=lambda cov: _sort_key(min(cov, key=_sort_key)))
        level = tuple(covers)
        if not levels or levels[-1] != level:
            levels.append(level)

    filt = Filtration(levels=tuple(levels))
    filt.validate()
    return filt
