"""Multigraph storage, temporal edge-list ingestion, and snapshot aggregation.

Snapshot graphs are undirected simple graphs (all nodes terminal); rule
right-hand sides reuse the same container with multiplicities, node labels,
and boundary-degree counters.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Hashable, Iterable

Node = Hashable
#: Terminal nodes carry label ``None``; nonterminals carry their integer symbol.
Label = int | None

MONTH_SECONDS = 2_592_000


class ParseError(ValueError):
    """Malformed ingestion input, tagged with the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _sort_key(v):
    return (v.__class__.__name__, v)


class LabeledMultigraph:
    """Undirected multigraph with node labels and boundary-degree counters.

    Edges carry positive integer multiplicities; (u, v) and (v, u) address the
    same entry and self-loops are permitted.
    """

    __slots__ = ("_adj", "_label", "_boundary")

    def __init__(self):
        self._adj: dict[Node, dict[Node, int]] = {}
        self._label: dict[Node, Label] = {}
        self._boundary: dict[Node, int] = {}

    # -- nodes ------------------------------------------------------------

    def add_node(self, v: Node, label: Label = None, boundary: int = 0) -> None:
        if v not in self._adj:
            self._adj[v] = {}
        self._label[v] = label
        self._boundary[v] = boundary

    def has_node(self, v: Node) -> bool:
        return v in self._adj

    def nodes(self) -> list[Node]:
        return sorted(self._adj, key=_sort_key)

    @property
    def node_count(self) -> int:
        return len(self._adj)

    def label(self, v: Node) -> Label:
        return self._label[v]

    def set_label(self, v: Node, label: Label) -> None:
        if v not in self._adj:
            raise KeyError(v)
        self._label[v] = label

    def boundary(self, v: Node) -> int:
        return self._boundary[v]

    def set_boundary(self, v: Node, b: int) -> None:
        if b < 0:
            raise ValueError(f"negative boundary degree for {v!r}")
        self._boundary[v] = b

    def remove_node(self, v: Node) -> None:
        for u in list(self._adj[v]):
            del self._adj[u if u != v else v][v]
        del self._adj[v]
        del self._label[v]
        del self._boundary[v]

    # -- edges ------------------------------------------------------------

    def add_edge(self, u: Node, v: Node, count: int = 1) -> None:
        if count < 1:
            raise ValueError("edge multiplicity increments must be positive")
        if u not in self._adj:
            self.add_node(u)
        if v not in self._adj:
            self.add_node(v)
        self._adj[u][v] = self._adj[u].get(v, 0) + count
        if u != v:
            self._adj[v][u] = self._adj[u][v]

    def remove_edge(self, u: Node, v: Node, count: int = 1) -> None:
        have = self._adj.get(u, {}).get(v, 0)
        if have < count:
            raise KeyError(f"edge ({u!r}, {v!r}) has multiplicity {have} < {count}")
        left = have - count
        if left:
            self._adj[u][v] = left
            if u != v:
                self._adj[v][u] = left
        else:
            del self._adj[u][v]
            if u != v:
                del self._adj[v][u]

    def multiplicity(self, u: Node, v: Node) -> int:
        return self._adj.get(u, {}).get(v, 0)

    def has_edge(self, u: Node, v: Node) -> bool:
        return v in self._adj.get(u, {})

    def edges(self) -> list[tuple[Node, Node, int]]:
        """Distinct edges as (u, v, multiplicity), canonically ordered."""
        out = []
        for u in self._adj:
            for v, m in self._adj[u].items():
                if _sort_key(u) <= _sort_key(v):
                    out.append((u, v, m))
        out.sort(key=lambda e: (_sort_key(e[0]), _sort_key(e[1])))
        return out

    def neighbors(self, v: Node) -> list[Node]:
        return sorted(self._adj[v], key=_sort_key)

    def degree(self, v: Node) -> int:
        """Multiplicity-weighted degree; self-loops count twice."""
        d = 0
        for u, m in self._adj[v].items():
            d += 2 * m if u == v else m
        return d

    @property
    def simple_size(self) -> int:
        """Number of distinct edges, multiplicity ignored."""
        loops = sum(1 for u in self._adj if u in self._adj[u])
        crossing = sum(len(nbrs) for nbrs in self._adj.values()) - loops
        return crossing // 2 + loops

    @property
    def unit_size(self) -> int:
        """Total edge multiplicity."""
        total = 0
        for u in self._adj:
            for v, m in self._adj[u].items():
                if u == v:
                    total += 2 * m
                else:
                    total += m
        return total // 2

    # -- whole-graph helpers -----------------------------------------------

    def copy(self) -> "LabeledMultigraph":
        g = LabeledMultigraph()
        g._adj = {u: dict(nbrs) for u, nbrs in self._adj.items()}
        g._label = dict(self._label)
        g._boundary = dict(self._boundary)
        return g

    def induced(self, keep: Iterable[Node]) -> "LabeledMultigraph":
        keep = set(keep)
        g = LabeledMultigraph()
        for v in keep:
            g.add_node(v, self._label[v], self._boundary[v])
        for u in keep:
            for v, m in self._adj[u].items():
                if v in keep and _sort_key(u) <= _sort_key(v):
                    g.add_edge(u, v, m)
        return g

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledMultigraph):
            return NotImplemented
        return (
            self._adj == other._adj
            and self._label == other._label
            and self._boundary == other._boundary
        )

    def __repr__(self) -> str:
        return f"LabeledMultigraph(n={self.node_count}, m={self.simple_size})"


def connected_components(g: LabeledMultigraph) -> list[list[Node]]:
    """Components as sorted node lists, largest first (ties by least node)."""
    seen: set[Node] = set()
    comps = []
    for start in g.nodes():
        if start in seen:
            continue
        stack, comp = [start], []
        seen.add(start)
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in g.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        comps.append(sorted(comp, key=_sort_key))
    comps.sort(key=lambda c: (-len(c), _sort_key(c[0])))
    return comps


def is_connected(g: LabeledMultigraph) -> bool:
    return g.node_count <= 1 or len(connected_components(g)) == 1


def disjoint_union(graphs: Iterable[LabeledMultigraph]) -> LabeledMultigraph:
    """Union onto fresh integer node ids, in input order."""
    out = LabeledMultigraph()
    offset = 0
    for g in graphs:
        local = {v: offset + i for i, v in enumerate(g.nodes())}
        for v in g.nodes():
            out.add_node(local[v], g.label(v), g.boundary(v))
        for u, v, m in g.edges():
            out.add_edge(local[u], local[v], m)
        offset += g.node_count
    return out


class Vocabulary:
    """Bijective map between external id tokens and dense internal indices."""

    def __init__(self, externals: Iterable[str] = ()):
        self._externals: list[str] = []
        self._index: dict[str, int] = {}
        for ext in externals:
            self.intern(ext)

    def intern(self, external: str) -> int:
        idx = self._index.get(external)
        if idx is None:
            idx = len(self._externals)
            self._externals.append(external)
            self._index[external] = idx
        return idx

    def external(self, index: int) -> str:
        return self._externals[index]

    def index(self, external: str) -> int:
        return self._index[external]

    def __contains__(self, external: str) -> bool:
        return external in self._index

    def __len__(self) -> int:
        return len(self._externals)

    def externals(self) -> list[str]:
        return list(self._externals)


@dataclass
class DynamicGraph:
    """Ordered snapshot sequence over a shared node vocabulary."""

    vocab: Vocabulary
    snapshots: list[LabeledMultigraph]
    window_spec: int | str = "unit"

    def __len__(self) -> int:
        return len(self.snapshots)

    def total_nodes(self) -> int:
        """Distinct nodes across all snapshots."""
        seen: set[Node] = set()
        for g in self.snapshots:
            seen.update(g._adj)
        return len(seen)

    def total_edges(self) -> int:
        """Distinct edges across all snapshots, multiplicity ignored."""
        seen: set[tuple[Node, Node]] = set()
        for g in self.snapshots:
            for u, v, _ in g.edges():
                seen.add((u, v))
        return len(seen)


def _window_width(window_spec: int | str) -> int:
    if window_spec == "unit":
        return 1
    width = int(window_spec)
    if width <= 0:
        raise ValueError(f"window width must be positive, got {window_spec!r}")
    return width


def ingest_edge_list(
    lines: Iterable[str],
    window_spec: int | str = "unit",
    drop_self_loops: bool = False,
) -> DynamicGraph:
    """Aggregate `u v t` interaction lines into fixed-width snapshot windows.

    Within a window, repeated (u, v) interactions collapse to one simple
    edge; a snapshot's node set is exactly the endpoints of its edges.
    Lines starting with ``#`` and blank lines are skipped.
    """
    width = _window_width(window_spec)
    vocab = Vocabulary()
    interactions: list[tuple[int, int, int]] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(line_no, f"expected 'u v t', got {line!r}")
        u_ext, v_ext, t_raw = parts
        try:
            t = int(t_raw)
        except ValueError:
            raise ParseError(line_no, f"timestamp {t_raw!r} is not an integer") from None
        if t < 0:
            raise ParseError(line_no, f"negative timestamp {t}")
        if drop_self_loops and u_ext == v_ext:
            continue
        interactions.append((vocab.intern(u_ext), vocab.intern(v_ext), t))
    if not interactions:
        raise ParseError(0, "no interactions in input")

    t_min = min(t for _, _, t in interactions)
    t_max = max(t for _, _, t in interactions)
    n_windows = (t_max - t_min) // width + 1
    snapshots = [LabeledMultigraph() for _ in range(n_windows)]
    for u, v, t in interactions:
        k = (t - t_min) // width
        if not snapshots[k].has_edge(u, v):
            snapshots[k].add_edge(u, v)
    return DynamicGraph(vocab=vocab, snapshots=snapshots, window_spec=window_spec)


def ingest_path(
    path: str | os.PathLike,
    window_spec: int | str = "unit",
    drop_self_loops: bool = False,
) -> DynamicGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return ingest_edge_list(fh, window_spec, drop_self_loops)


def snapshot_stats(dyn: DynamicGraph) -> list[tuple[int, int, int]]:
    """(t, node_count, edge_count) per snapshot; multiplicity ignored."""
    return [(t, g.node_count, g.simple_size) for t, g in enumerate(dyn.snapshots)]


def stats_csv(dyn: DynamicGraph) -> str:
    rows = ["t,n,m"]
    rows += [f"{t},{n},{m}" for t, n, m in snapshot_stats(dyn)]
    return "\n".join(rows) + "\n"


def write_snapshot_dir(dyn: DynamicGraph, directory: str | os.PathLike) -> None:
    """One adjacency-list file per snapshot: `u v` per distinct edge."""
    os.makedirs(directory, exist_ok=True)
    for t, g in enumerate(dyn.snapshots):
        path = os.path.join(directory, f"snapshot_{t:04d}.txt")
        with open(path, "w", encoding="utf-8") as fh:
            for u, v, _ in g.edges():
                fh.write(f"{dyn.vocab.external(u)} {dyn.vocab.external(v)}\n")


def read_snapshot_dir(directory: str | os.PathLike) -> DynamicGraph:
    """Rebuild a DynamicGraph from per-snapshot adjacency files."""
    names = sorted(f for f in os.listdir(directory) if f.startswith("snapshot_"))
    if not names:
        raise ParseError(0, f"no snapshot files in {directory}")
    vocab = Vocabulary()
    snapshots = []
    for name in names:
        g = LabeledMultigraph()
        with open(os.path.join(directory, name), "r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ParseError(line_no, f"expected 'u v', got {line!r}")
                u, v = (vocab.intern(p) for p in parts)
                if not g.has_edge(u, v):
                    g.add_edge(u, v)
        snapshots.append(g)
    return DynamicGraph(vocab=vocab, snapshots=snapshots, window_spec="unit")


def write_edge_list(g: LabeledMultigraph, name_of=str) -> str:
    """Edge-list text for a single graph (timestamps omitted)."""
    return "".join(f"{name_of(u)} {name_of(v)}\n" for u, v, _ in g.edges())
