"""Vertex-replacement rules and grammars: extraction, replay, isomorphism.

A rule rewrites an integer nonterminal symbol into a doubly-labeled
multigraph: every right-hand-side node is either terminal or a nonterminal
whose symbol equals its internal degree plus its boundary degree, and the
rule's left-hand side equals the total boundary degree of its RHS.

Extraction compresses a filtration bottom-up, at each step choosing the
candidate cover (at most ``mu`` units) that minimizes the grammar's
description length. The derivation record keeps, per RHS edge unit, the pair
of original graph nodes it stands for ("anchors"), which is what lets
``replay_derivation`` rebuild the source graph exactly rather than merely up
to isomorphism.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .clustering import DendroNode, Dendrogram, Filtration, dendrogram_to_filtration
from .graphs import LabeledMultigraph, Node, _sort_key, is_connected

CANONICAL_SIZE_CAP = 16


class IntegrityError(RuntimeError):
    """A grammar's derivation record is inconsistent with its rules."""

    def __init__(self, rule_id, message: str):
        super().__init__(f"rule {rule_id}: {message}")
        self.rule_id = rule_id


# ---------------------------------------------------------------------------
# anchor bookkeeping: per-edge-unit original endpoints, oriented to the key
# ---------------------------------------------------------------------------


def _akey(a, b):
    return (a, b) if _sort_key(a) <= _sort_key(b) else (b, a)


def anchors_add(store: dict, a, b, pair: tuple) -> None:
    key = _akey(a, b)
    if key != (a, b):
        pair = (pair[1], pair[0])
    store.setdefault(key, []).append(pair)


def anchors_get(store: dict, a, b) -> list[tuple]:
    """Anchor pairs of edge (a, b), oriented (a_side, b_side)."""
    key = _akey(a, b)
    pairs = store.get(key, [])
    if key != (a, b):
        return [(q, p) for p, q in pairs]
    return list(pairs)


def anchors_remove(store: dict, a, b, pair: tuple) -> bool:
    key = _akey(a, b)
    if key != (a, b):
        pair = (pair[1], pair[0])
    pairs = store.get(key)
    if not pairs or pair not in pairs:
        return False
    pairs.remove(pair)
    if not pairs:
        del store[key]
    return True


def anchors_pop_node(store: dict, x) -> list[tuple]:
    """Remove all anchors on edges incident to x; returns [(other, x_side, other_side)]."""
    out = []
    for key in [k for k in store if x in k]:
        a, b = key
        for p, q in store.pop(key):
            if a == x:
                out.append((b, p, q))
            else:
                out.append((a, q, p))
    return out


@dataclass
class Rule:
    """LHS nonterminal symbol plus doubly-labeled multigraph RHS."""

    rule_id: int
    lhs: int
    rhs: LabeledMultigraph
    anchors: dict = field(default_factory=dict)

    def copy(self) -> "Rule":
        return Rule(
            rule_id=self.rule_id,
            lhs=self.lhs,
            rhs=self.rhs.copy(),
            anchors={k: list(v) for k, v in self.anchors.items()},
        )

    def validate(self) -> None:
        rhs = self.rhs
        if rhs.node_count < 1:
            raise IntegrityError(self.rule_id, "empty RHS")
        if self.lhs != sum(rhs.boundary(v) for v in rhs.nodes()):
            raise IntegrityError(self.rule_id, "lhs does not equal total boundary degree")
        for v in rhs.nodes():
            lab = rhs.label(v)
            if lab is not None and lab != rhs.degree(v) + rhs.boundary(v):
                raise IntegrityError(
                    self.rule_id,
                    f"nonterminal {v} labeled {lab}, expected degree {rhs.degree(v)} "
                    f"+ boundary {rhs.boundary(v)}",
                )
        for u, v, m in rhs.edges():
            if len(anchors_get(self.anchors, u, v)) != m:
                raise IntegrityError(self.rule_id, f"edge ({u}, {v}) has {m} units but mismatched anchors")


class Grammar:
    """Rule set plus derivation record, cover map, and alias map."""

    def __init__(self, mu: int):
        self.mu = mu
        self.rules: dict[int, Rule] = {}
        self.root_id: int | None = None
        self.parent: dict[int, tuple[int, int]] = {}
        self.child_at: dict[tuple[int, int], int] = {}
        self.cover_rule: dict[Node, int] = {}
        self.alias: dict[Node, int] = {}
        self.gram_filtration: Filtration | None = None
        self.tombstones: dict[int, int] = {}
        self._next_rule_id = 0

    # -- construction ------------------------------------------------------

    def new_rule_id(self) -> int:
        rid = self._next_rule_id
        self._next_rule_id += 1
        return rid

    def add_rule(self, rule: Rule) -> None:
        self.rules[rule.rule_id] = rule
        self._next_rule_id = max(self._next_rule_id, rule.rule_id + 1)

    def copy(self) -> "Grammar":
        g = Grammar(self.mu)
        g.rules = {rid: r.copy() for rid, r in self.rules.items()}
        g.root_id = self.root_id
        g.parent = dict(self.parent)
        g.child_at = dict(self.child_at)
        g.cover_rule = dict(self.cover_rule)
        g.alias = dict(self.alias)
        g.gram_filtration = self.gram_filtration
        g._next_rule_id = self._next_rule_id
        return g

    # -- derivation queries --------------------------------------------------

    def terminals_of(self, rid: int) -> list[Node]:
        return sorted((v for v, r in self.cover_rule.items() if r == rid), key=_sort_key)

    def covered_nodes(self, rid: int) -> set[Node]:
        out = set(self.terminals_of(rid))
        for (r, _), child in self.child_at.items():
            if r == rid:
                out |= self.covered_nodes(child)
        return out

    def path_to_root(self, rid: int) -> list[int]:
        path = [rid]
        while path[-1] in self.parent:
            path.append(self.parent[path[-1]][0])
        return path

    def rep(self, rid: int, v: Node) -> int:
        """RHS node of `rid` standing for covered graph node v."""
        r = self.cover_rule.get(v)
        if r is None:
            raise IntegrityError(rid, f"node {v!r} has no covering rule")
        if r == rid:
            return self.alias[v]
        cur = r
        while cur in self.parent:
            p, node = self.parent[cur]
            if p == rid:
                return node
            cur = p
        raise IntegrityError(rid, f"node {v!r} is not covered by this rule")

    def lca_rule(self, u: Node, v: Node) -> int:
        up = self.path_to_root(self.cover_rule[u])
        in_up = set(up)
        cur = self.cover_rule[v]
        while cur not in in_up:
            cur = self.parent[cur][0]
        return cur

    # -- integrity -----------------------------------------------------------

    def check_invariants(self) -> None:
        if self.root_id is None or self.root_id not in self.rules:
            raise IntegrityError(self.root_id, "missing root rule")
        if self.rules[self.root_id].lhs != 0:
            raise IntegrityError(self.root_id, "root rule must have lhs 0")
        if self.root_id in self.parent:
            raise IntegrityError(self.root_id, "root rule has a parent")
        for rid, rule in self.rules.items():
            rule.validate()
            if rid != self.root_id and rid not in self.parent:
                raise IntegrityError(rid, "non-root rule without a parent")
            for v in rule.rhs.nodes():
                lab = rule.rhs.label(v)
                if lab is not None:
                    child = self.child_at.get((rid, v))
                    if child is None:
                        raise IntegrityError(rid, f"dangling nonterminal node {v}")
                    if self.rules[child].lhs != lab:
                        raise IntegrityError(
                            rid, f"nonterminal {v} labeled {lab} but child {child} has lhs "
                            f"{self.rules[child].lhs}"
                        )
        for child, (p, node) in self.parent.items():
            if self.child_at.get((p, node)) != child:
                raise IntegrityError(child, "parent/child_at mismatch")
            if self.rules[p].rhs.label(node) is None:
                raise IntegrityError(p, f"child attached at terminal node {node}")
        for v, rid in self.cover_rule.items():
            a = self.alias.get(v)
            if a is None or not self.rules[rid].rhs.has_node(a):
                raise IntegrityError(rid, f"alias of {v!r} missing from RHS")
            if self.rules[rid].rhs.label(a) is not None:
                raise IntegrityError(rid, f"alias of {v!r} is not a terminal node")
        for rid, rule in self.rules.items():
            seen = {}
            for v in self.terminals_of(rid):
                a = self.alias[v]
                if a in seen:
                    raise IntegrityError(rid, f"alias collision between {seen[a]!r} and {v!r}")
                seen[a] = v
            for u, w, _ in rule.rhs.edges():
                for pu, pw in anchors_get(rule.anchors, u, w):
                    if self.rep(rid, pu) != u or self.rep(rid, pw) != w:
                        raise IntegrityError(rid, f"anchor ({pu!r}, {pw!r}) does not resolve to edge ({u}, {w})")


# ---------------------------------------------------------------------------
# description length
# ---------------------------------------------------------------------------


def description_length(rule: Rule, multiplicity: int = 1) -> float:
    """Bit cost of one rule: lhs, labels, boundary degrees, adjacency.

    A frequency credit of log2(multiplicity) rewards reuse of an
    isomorphism class; grammar DL is the sum of credited rule DLs.
    """
    bits = math.log2(1 + rule.lhs)
    rhs = rule.rhs
    for v in rhs.nodes():
        bits += 1.0  # terminal-vs-nonterminal alphabet bit
        lab = rhs.label(v)
        if lab is not None:
            bits += math.log2(1 + lab)
        bits += math.log2(1 + rhs.boundary(v))
    for _, _, m in rhs.edges():
        bits += math.log2(1 + m)
    return bits - math.log2(multiplicity)


# ---------------------------------------------------------------------------
# isomorphism and canonical forms
# ---------------------------------------------------------------------------


def rule_isomorphic(a: Rule, b: Rule) -> bool:
    """Equal LHS plus a label- and multiplicity-preserving RHS isomorphism.

    Boundary degrees are deliberately ignored.
    """
    if a.lhs != b.lhs:
        return False
    ga, gb = a.rhs, b.rhs
    na, nb = ga.nodes(), gb.nodes()
    if len(na) != len(nb) or ga.unit_size != gb.unit_size:
        return False
    def profile(g, v):
        lab = g.label(v)
        return (lab is not None, lab if lab is not None else -1, g.degree(v), g.multiplicity(v, v))

    if sorted(profile(ga, v) for v in na) != sorted(profile(gb, v) for v in nb):
        return False

    order = sorted(na, key=lambda v: (-ga.degree(v), _sort_key(v)))
    mapping: dict = {}
    used: set = set()

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        u = order[i]
        for v in nb:
            if v in used or ga.label(u) != gb.label(v):
                continue
            if ga.multiplicity(u, u) != gb.multiplicity(v, v):
                continue
            ok = True
            for up, vp in mapping.items():
                if ga.multiplicity(u, up) != gb.multiplicity(v, vp):
                    ok = False
                    break
            if not ok:
                continue
            mapping[u] = v
            used.add(v)
            if extend(i + 1):
                return True
            del mapping[u]
            used.discard(v)
        return False

    return extend(0)


def _canonical_small(rule: Rule, g: LabeledMultigraph, n: int) -> bytes:
    """Minimum signature over all orderings; cheap for up to 5! permutations."""
    nodes = g.nodes()
    labels = {v: repr(g.label(v)) for v in nodes}
    adj = {v: g._adj[v] for v in nodes}
    best = None
    for perm in itertools.permutations(nodes):
        sig = tuple(labels[v] for v in perm) + tuple(
            adj[perm[i]].get(perm[j], 0) for i in range(n) for j in range(i, n)
        )
        if best is None or sig < best:
            best = sig
    return repr((rule.lhs, n, best)).encode("ascii")


def _refine_colors(g: LabeledMultigraph) -> dict[Node, str]:
    color = {v: repr(("T",) if g.label(v) is None else ("N", g.label(v))) for v in g.nodes()}
    for _ in range(g.node_count):
        sig = {}
        for v in g.nodes():
            around = sorted((color[u], m) for u, m in g._adj[v].items() if u != v)
            sig[v] = repr((color[v], around, g.multiplicity(v, v)))
        if len(set(sig.values())) == len(set(color.values())):
            ranked = {s: i for i, s in enumerate(sorted(set(sig.values())))}
            return {v: f"{ranked[sig[v]]:04d}" for v in g.nodes()}
        color = sig
    ranked = {s: i for i, s in enumerate(sorted(set(color.values())))}
    return {v: f"{ranked[color[v]]:04d}" for v in g.nodes()}


def canonical_form(rule: Rule, cap: int = CANONICAL_SIZE_CAP) -> bytes:
    """Canonical byte string: equal strings iff the rules are rule-isomorphic."""
    g = rule.rhs
    n = g.node_count
    if n > cap:
        raise ValueError(f"RHS has {n} nodes, above canonicalization cap {cap}")
    if n <= 5:
        return _canonical_small(rule, g, n)
    color = _refine_colors(g)
    cells: dict[str, list[Node]] = {}
    for v in g.nodes():
        cells.setdefault(color[v], []).append(v)
    cell_order = [cells[c] for c in sorted(cells)]

    lab_key = {v: repr(g.label(v)) for v in g.nodes()}
    best: list | None = None

    def search(placed: list[Node], rows: list) -> None:
        nonlocal best
        if len(placed) == n:
            if best is None or rows < best:
                best = list(rows)
            return
        remaining: list[Node] = []
        for cell in cell_order:
            if all(v in placed_set for v in cell):
                continue
            remaining = [v for v in cell if v not in placed_set]
            break
        for v in sorted(remaining, key=_sort_key):
            row = (lab_key[v], g.multiplicity(v, v), tuple(g.multiplicity(v, u) for u in placed))
            rows.append(row)
            if best is not None and rows > best[: len(rows)]:
                rows.pop()
                continue
            placed.append(v)
            placed_set.add(v)
            search(placed, rows)
            placed.pop()
            placed_set.discard(v)
            rows.pop()

    placed_set: set = set()
    search([], [])
    return repr((rule.lhs, n, best)).encode("ascii")


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


class _TVertex:
    __slots__ = ("members", "children", "realized")

    def __init__(self, members: frozenset, children: list):
        self.members = members
        self.children = children  # list of _TVertex
        self.realized = None  # working-graph node once compressed

    @property
    def is_leaf(self) -> bool:
        return not self.children


def _containment_tree(filtration: Filtration) -> _TVertex:
    """Mutable cover-containment tree; single-child chains collapse."""
    current: dict[frozenset, _TVertex] = {}
    for cover in filtration.levels[0]:
        leaves = [_TVertex(frozenset([v]), []) for v in sorted(cover, key=_sort_key)]
        for leaf in leaves:
            leaf.realized = next(iter(leaf.members))
        if len(leaves) == 1:
            current[cover] = leaves[0]
        else:
            current[cover] = _TVertex(cover, leaves)
    for level in filtration.levels[1:]:
        nxt: dict[frozenset, _TVertex] = {}
        for cover in level:
            children = [current[c] for c in current if c <= cover]
            children.sort(key=lambda t: _sort_key(min(t.members, key=_sort_key)))
            if len(children) == 1 and children[0].members == cover:
                nxt[cover] = children[0]
            else:
                nxt[cover] = _TVertex(cover, children)
        current = nxt
    (root,) = current.values()
    return root


def _candidate_rule(
    work: LabeledMultigraph, astore: dict, units: list
) -> tuple[int, LabeledMultigraph, dict, dict]:
    """Build the rule a compression of `units` would emit (no side effects)."""
    units = sorted(units, key=_sort_key)
    local = {x: i for i, x in enumerate(units)}
    unit_set = set(units)
    rhs = LabeledMultigraph()
    for x in units:
        lab = work.label(x)
        rhs.add_node(local[x], lab, 0)
    anchors: dict = {}
    lhs = 0
    for x in units:
        b = 0
        for y, m in work._adj[x].items():
            if y in unit_set:
                if _sort_key(x) <= _sort_key(y):
                    rhs.add_edge(local[x], local[y], m)
                    for px, py in anchors_get(astore, x, y):
                        anchors_add(anchors, local[x], local[y], (px, py))
            else:
                b += m
        rhs.set_boundary(local[x], b)
        lhs += b
    return lhs, rhs, anchors, local


def extract_grammar(
    g: LabeledMultigraph, filtration: Filtration, mu: int, seed: int = 0
) -> Grammar:
    """MDL-guided bottom-up rule extraction over a filtration of V(g)."""
    if mu < 2:
        raise ValueError(f"mu must be at least 2, got {mu}")
    if g.node_count == 0:
        raise ValueError("cannot extract a grammar from an empty graph")
    if not is_connected(g):
        raise ValueError("graph is disconnected; extract per component and merge")
    filtration.validate()
    if filtration.node_set != frozenset(g.nodes()):
        raise ValueError("filtration does not cover the graph's node set")

    gram = Grammar(mu)
    if g.node_count == 1:
        (v,) = g.nodes()
        rid = gram.new_rule_id()
        rhs = LabeledMultigraph()
        rhs.add_node(0, None, 0)
        anchors: dict = {}
        for _ in range(g.multiplicity(v, v)):
            rhs.add_edge(0, 0)
            anchors_add(anchors, 0, 0, (v, v))
        gram.add_rule(Rule(rid, 0, rhs, anchors))
        gram.cover_rule[v] = rid
        gram.alias[v] = 0
        gram.root_id = rid
        gram.gram_filtration = _grammar_filtration(gram)
        return gram

    work = g.copy()
    astore: dict = {}
    for u, v, m in g.edges():
        for _ in range(m):
            anchors_add(astore, u, v, (u, v))
    unit_rule: dict = {}
    canon_count: Counter = Counter()
    synth = [0]

    def compress(units: list, members: frozenset) -> Node:
        lhs, rhs, anchors, local = _candidate_rule(work, astore, units)
        rid = gram.new_rule_id()
        rule = Rule(rid, lhs, rhs, anchors)
        gram.add_rule(rule)
        canon_count[canonical_form(rule)] += 1
        unit_set = set(units)
        for x in units:
            if x in unit_rule:
                child = unit_rule.pop(x)
                gram.parent[child] = (rid, local[x])
                gram.child_at[(rid, local[x])] = child
            else:
                gram.cover_rule[x] = rid
                gram.alias[x] = local[x]
        # surgically replace the units with one nonterminal node in the working graph
        new_node = ("u", synth[0])
        synth[0] += 1
        cross: dict[Node, int] = {}
        cross_anchors: dict[Node, list] = {}
        for x in sorted(units, key=_sort_key):
            for y in sorted(work._adj[x], key=_sort_key):
                if y in unit_set:
                    continue  # internal: already copied into the rule RHS
                cross[y] = cross.get(y, 0) + work._adj[x][y]
                cross_anchors.setdefault(y, []).extend(anchors_get(astore, x, y))
        for x in units:
            anchors_pop_node(astore, x)
            work.remove_node(x)
        work.add_node(new_node, lhs, 0)
        for y in sorted(cross, key=_sort_key):
            work.add_edge(new_node, y, cross[y])
            for px, py in cross_anchors[y]:
                anchors_add(astore, new_node, y, (px, py))
        unit_rule[new_node] = rid
        return new_node

    # a candidate's rule is invariant while all its units are live, so raw DL
    # and canonical key are cached per unit set; only the frequency credit of
    # its isomorphism class moves between iterations
    cand_cache: dict[frozenset, tuple[float, bytes]] = {}

    def dl_of(units: list) -> float:
        key = frozenset(units)
        hit = cand_cache.get(key)
        if hit is None:
            lhs, rhs, anchors, _ = _candidate_rule(work, astore, units)
            probe = Rule(-1, lhs, rhs, anchors)
            hit = (description_length(probe, 1), canonical_form(probe))
            cand_cache[key] = hit
        raw, canon = hit
        return raw - math.log2(canon_count[canon] + 1)

    root_vertex = _containment_tree(filtration)

    def ready_vertices(vertex: _TVertex, out: list) -> None:
        if vertex.is_leaf or vertex.realized is not None:
            return
        if all(c.realized is not None for c in vertex.children):
            out.append(vertex)
        else:
            for c in vertex.children:
                ready_vertices(c, out)

    while work.node_count > 1:
        ready: list[_TVertex] = []
        ready_vertices(root_vertex, ready)
        if not ready:
            raise IntegrityError(None, "extraction stalled with no compressible cover")
        fitting = [v for v in ready if len(v.children) <= mu]
        if fitting:
            scored = []
            for v in fitting:
                units = [c.realized for c in v.children]
                scored.append((dl_of(units), len(v.members), _sort_key(min(v.members, key=_sort_key)), v))
            scored.sort(key=lambda s: s[:3])
            vertex = scored[0][3]
            vertex.realized = compress([c.realized for c in vertex.children], vertex.members)
        else:
            # oversized cover: greedy best-prefix split of its children
            ready.sort(key=lambda v: (len(v.members), _sort_key(min(v.members, key=_sort_key))))
            vertex = ready[0]
            group = _best_child_group(work, vertex.children, mu, dl_of)
            merged = _TVertex(frozenset().union(*(c.members for c in group)), list(group))
            merged.realized = compress([c.realized for c in group], merged.members)
            vertex.children = [c for c in vertex.children if c not in group] + [merged]
            vertex.children.sort(key=lambda t: _sort_key(min(t.members, key=_sort_key)))

    gram.root_id = unit_rule[work.nodes()[0]]
    gram.gram_filtration = _grammar_filtration(gram)
    gram.check_invariants()
    return gram


def _best_child_group(work: LabeledMultigraph, children: list, mu: int, dl_of) -> list:
    """Pick 2..mu children to compress out of an oversized cover.

    Greedy best-prefix selection: the cheapest connected pair is grown one
    cheapest adjacent child at a time up to mu units, and the DL-minimizing
    prefix along the way wins (ties prefer fewer units, then least member).
    """
    idx = {c.realized: c for c in children}
    order = sorted(idx, key=_sort_key)

    def member_key(units):
        return _sort_key(min(min(idx[x].members, key=_sort_key) for x in units))

    pairs = []
    for x in order:
        for y in work._adj[x]:
            if y in idx and y != x and _sort_key(x) < _sort_key(y):
                pairs.append([x, y])
    if not pairs:
        pairs = [order[:2]]  # children with no mutual edges: deterministic fallback
    best_pair = min(pairs, key=lambda p: (dl_of(p), member_key(p)))

    group = list(best_pair)
    best = (dl_of(group), len(group), member_key(group), list(group))
    while len(group) < mu:
        frontier = set()
        for x in group:
            for y in work._adj[x]:
                if y in idx and y not in group:
                    frontier.add(y)
        if not frontier:
            break
        y = min(frontier, key=lambda y: (dl_of(group + [y]), _sort_key(y)))
        group.append(y)
        cand = (dl_of(group), len(group), member_key(group), list(group))
        if cand[:3] < best[:3]:
            best = cand
    return [idx[x] for x in sorted(best[3], key=_sort_key)]


def _grammar_filtration(gram: Grammar) -> Filtration:
    """Rule-induced filtration: the derivation tree read as a dendrogram."""
    kids: dict[int, list[tuple[int, int]]] = {}
    for (r, node), child in gram.child_at.items():
        kids.setdefault(r, []).append((node, child))

    def build(rid: int) -> DendroNode:
        children = [DendroNode(frozenset([v])) for v in gram.terminals_of(rid)]
        for _, child in sorted(kids.get(rid, [])):
            children.append(build(child))
        if len(children) == 1:
            return children[0]
        members = frozenset().union(*(c.members for c in children))
        return DendroNode(members, tuple(children))

    return dendrogram_to_filtration(Dendrogram(root=build(gram.root_id)))


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def replay_derivation(grammar: Grammar) -> LabeledMultigraph:
    """Apply the recorded derivation from the root; returns the covered graph.

    Every boundary edge is wired to the exact recorded attachment node, so the
    result equals the source graph under its own node identities.
    """
    if grammar.root_id is None or grammar.root_id not in grammar.rules:
        raise IntegrityError(grammar.root_id, "missing root rule")

    alias_inv: dict[tuple[int, int], Node] = {}
    for v, rid in grammar.cover_rule.items():
        alias_inv[(rid, grammar.alias[v])] = v

    counter = [0]
    origin: dict[int, tuple[int, int]] = {}
    label: dict[int, int | None] = {}
    adj: dict[int, dict[int, list]] = {}

    def link(a: int, b: int, pair: tuple) -> None:
        # adj[x][y] keeps pairs oriented (x_side, y_side)
        adj.setdefault(a, {}).setdefault(b, []).append(pair)
        if a != b:
            adj.setdefault(b, {}).setdefault(a, []).append((pair[1], pair[0]))

    def unlink_node(x: int) -> list[tuple[int, tuple]]:
        units = []
        for y, pairs in sorted(adj.get(x, {}).items()):
            for pair in pairs:
                units.append((y, pair))
            if y != x:
                del adj[y][x]
        adj.pop(x, None)
        return units

    def instantiate(rid: int) -> dict[int, int]:
        rule = grammar.rules[rid]
        mapping = {}
        for node in rule.rhs.nodes():
            iid = counter[0]
            counter[0] += 1
            mapping[node] = iid
            origin[iid] = (rid, node)
            label[iid] = rule.rhs.label(node)
            adj.setdefault(iid, {})
        for a, b, _ in rule.rhs.edges():
            for pair in anchors_get(rule.anchors, a, b):
                link(mapping[a], mapping[b], pair)
        return mapping

    queue: list[int] = []

    def enqueue(mapping: dict[int, int]) -> None:
        for node in sorted(mapping):
            if label[mapping[node]] is not None:
                queue.append(mapping[node])

    enqueue(instantiate(grammar.root_id))
    steps = 0
    while queue:
        x = queue.pop(0)
        rid, node = origin[x]
        cid = grammar.child_at.get((rid, node))
        if cid is None:
            raise IntegrityError(rid, f"dangling nonterminal node {node}")
        child = grammar.rules[cid]
        broken = unlink_node(x)  # [(neighbor, (x_side, y_side))]
        if len(broken) != child.lhs:
            raise IntegrityError(
                cid, f"boundary mismatch: {len(broken)} broken edges for lhs {child.lhs}"
            )
        del origin[x], label[x]
        mapping = instantiate(cid)
        enqueue(mapping)
        attached: Counter = Counter()
        for y, (w_in, w_out) in broken:
            target = grammar.rep(cid, w_in)
            link(mapping[target], y, (w_in, w_out))
            attached[target] += 1
        for node2 in child.rhs.nodes():
            if attached[node2] != child.rhs.boundary(node2):
                raise IntegrityError(
                    cid,
                    f"boundary mismatch at node {node2}: wired {attached[node2]}, "
                    f"declared {child.rhs.boundary(node2)}",
                )
        steps += 1
        if steps > 10**6:
            raise IntegrityError(rid, "replay exceeded the expansion step limit")

    result = LabeledMultigraph()
    final: dict[int, Node] = {}
    for iid, (rid, node) in origin.items():
        v = alias_inv.get((rid, node))
        if v is None:
            raise IntegrityError(rid, f"terminal node {node} has no alias")
        final[iid] = v
        result.add_node(v, None, 0)
    for a in adj:
        for b, pairs in adj[a].items():
            if a > b:
                continue
            for pa, pb in pairs:
                if (pa, pb) != (final[a], final[b]):
                    raise IntegrityError(
                        origin[a][0],
                        f"anchor ({pa!r}, {pb!r}) disagrees with endpoints "
                        f"({final[a]!r}, {final[b]!r})",
                    )
                result.add_edge(final[a], final[b])
    return result


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def rule_to_dict(rule: Rule, name_of=str) -> dict:
    nodes = [
        {
            "id": v,
            "label": "T" if rule.rhs.label(v) is None else rule.rhs.label(v),
            "boundary_degree": rule.rhs.boundary(v),
        }
        for v in rule.rhs.nodes()
    ]
    edges = []
    for a, b, m in rule.rhs.edges():
        edges.append(
            {
                "a": a,
                "b": b,
                "multiplicity": m,
                "anchors": sorted(
                    [name_of(x), name_of(y)] for x, y in anchors_get(rule.anchors, a, b)
                ),
            }
        )
    return {"rule_id": rule.rule_id, "lhs": rule.lhs, "nodes": nodes, "edges": edges}


def rule_from_dict(doc: dict, node_of=None) -> Rule:
    if node_of is None:
        node_of = lambda s: int(s)
    rhs = LabeledMultigraph()
    for nd in doc["nodes"]:
        lab = None if nd["label"] == "T" else int(nd["label"])
        rhs.add_node(nd["id"], lab, nd["boundary_degree"])
    anchors: dict = {}
    for ed in doc["edges"]:
        rhs.add_edge(ed["a"], ed["b"], ed["multiplicity"])
        for x, y in ed["anchors"]:
            anchors_add(anchors, ed["a"], ed["b"], (node_of(x), node_of(y)))
    return Rule(doc["rule_id"], doc["lhs"], rhs, anchors)


def grammar_to_dict(gram: Grammar, name_of=str) -> dict:
    return {
        "mu": gram.mu,
        "root": gram.root_id,
        "rules": [rule_to_dict(gram.rules[rid], name_of) for rid in sorted(gram.rules)],
        "derivation": [
            {"child": child, "parent": p, "node": node}
            for child, (p, node) in sorted(gram.parent.items())
        ],
        "cover_map": {name_of(v): rid for v, rid in sorted(gram.cover_rule.items(), key=lambda kv: _sort_key(kv[0]))},
        "alias_map": {name_of(v): a for v, a in sorted(gram.alias.items(), key=lambda kv: _sort_key(kv[0]))},
    }


def grammar_from_dict(doc: dict, node_of=None) -> Grammar:
    if node_of is None:
        node_of = lambda s: int(s)
    gram = Grammar(doc["mu"])
    for rdoc in doc["rules"]:
        gram.add_rule(rule_from_dict(rdoc, node_of))
    gram.root_id = doc["root"]
    for dd in doc["derivation"]:
        gram.parent[dd["child"]] = (dd["parent"], dd["node"])
        gram.child_at[(dd["parent"], dd["node"])] = dd["child"]
    gram.cover_rule = {node_of(k): v for k, v in doc["cover_map"].items()}
    gram.alias = {node_of(k): v for k, v in doc["alias_map"].items()}
    gram.gram_filtration = _grammar_filtration(gram)
    return gram


def grammar_to_text(gram: Grammar, name_of=str) -> str:
    return json.dumps(grammar_to_dict(gram, name_of), sort_keys=True, indent=1) + "\n"


def grammar_from_text(text: str, node_of=None) -> Grammar:
    return grammar_from_dict(json.loads(text), node_of)
