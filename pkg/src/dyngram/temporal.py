"""Grammar updates across consecutive snapshots.

Edges of two snapshots fall into five classes: persistent, internal
additions, frontier additions, external additions, and deletions. Updates
apply deletions first, then internal additions, then one subgrammar merge per
connected component of newly arrived nodes, keeping every rule invariant
(lhs equals total boundary degree; nonterminal symbols equal internal degree
plus boundary degree) and keeping the derivation replayable to the new
snapshot exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .clustering import dendrogram_to_filtration, hierarchical_cluster
from .deviation import graph_edit_distance
from .graphs import LabeledMultigraph, Node, _sort_key, connected_components, disjoint_union
from .grammar import (
    Grammar,
    IntegrityError,
    Rule,
    anchors_add,
    anchors_remove,
    extract_grammar,
    rule_from_dict,
    rule_to_dict,
    _grammar_filtration,
)
from .seeding import derive_seed


class EdgeClass(enum.Enum):
    PERSISTENT = "persistent"
    INTERNAL_ADDITION = "internal_addition"
    FRONTIER_ADDITION = "frontier_addition"
    EXTERNAL_ADDITION = "external_addition"
    DELETION = "deletion"


def _ekey(u, v):
    return (u, v) if _sort_key(u) <= _sort_key(v) else (v, u)


def classify_edges(
    g_t: LabeledMultigraph, g_t1: LabeledMultigraph
) -> dict[tuple[Node, Node], EdgeClass]:
    """Assign every edge of E_t ∪ E_{t+1} to exactly one of the five classes."""
    v_t = set(g_t.nodes())
    out: dict[tuple[Node, Node], EdgeClass] = {}
    for u, v, _ in g_t.edges():
        if g_t1.has_edge(u, v):
            out[_ekey(u, v)] = EdgeClass.PERSISTENT
        else:
            out[_ekey(u, v)] = EdgeClass.DELETION
    for u, v, _ in g_t1.edges():
        if g_t.has_edge(u, v):
            continue
        u_old, v_old = u in v_t, v in v_t
        if u_old and v_old:
            cls = EdgeClass.INTERNAL_ADDITION
        elif u_old or v_old:
            cls = EdgeClass.FRONTIER_ADDITION
        else:
            cls = EdgeClass.EXTERNAL_ADDITION
        out[_ekey(u, v)] = cls
    return out


@dataclass
class UpdateReport:
    """Rule correspondence and per-rule edit costs for one grammar update."""

    correspondence: dict[int, int]
    created_rules: list[int]
    per_rule_edits: dict[int, float]
    edge_class_counts: dict[str, int]
    before_rules: dict[int, Rule] = field(default_factory=dict)
    after_rules: dict[int, Rule] = field(default_factory=dict)

    @property
    def total_edits(self) -> float:
        return sum(self.per_rule_edits.values())


# ---------------------------------------------------------------------------
# symbol propagation
# ---------------------------------------------------------------------------


def _adjust_chain_down(gram: Grammar, top_rid: int, v: Node, delta: int) -> None:
    """Fix symbols below `top_rid` after the degree of rep(top_rid, v) changed.

    Every rule on the path toward f(v) gains (or loses) one lhs unit and one
    boundary slot on its attachment node; nonterminal labels track along.
    """
    cur, node = top_rid, gram.rep(top_rid, v)
    while True:
        rule = gram.rules[cur]
        lab = rule.rhs.label(node)
        if lab is None:
            return
        rule.rhs.set_label(node, lab + delta)
        cur = gram.child_at[(cur, node)]
        child = gram.rules[cur]
        child.lhs += delta
        node = gram.rep(cur, v)
        child.rhs.set_boundary(node, child.rhs.boundary(node) + delta)


def _bump_boundary_up(gram: Grammar, w: Node, delta: int = 1) -> None:
    """Give w one more boundary slot and propagate the symbol change to the root."""
    rid = gram.cover_rule[w]
    rule = gram.rules[rid]
    node = gram.alias[w]
    rule.rhs.set_boundary(node, rule.rhs.boundary(node) + delta)
    rule.lhs += delta
    cur = rid
    while cur in gram.parent:
        prid, pnode = gram.parent[cur]
        prule = gram.rules[prid]
        prule.rhs.set_label(pnode, prule.rhs.label(pnode) + delta)
        prule.rhs.set_boundary(pnode, prule.rhs.boundary(pnode) + delta)
        prule.lhs += delta
        cur = prid


def _prune_if_empty(gram: Grammar, rid: int) -> None:
    """Delete rules whose RHS emptied, cascading up; an empty root stays put."""
    while rid is not None and gram.rules[rid].rhs.node_count == 0:
        up = gram.parent.get(rid)
        if up is None:
            return  # emptied root: update_grammar swaps in a replacement
        prid, pnode = up
        prule = gram.rules[prid]
        if prule.rhs.label(pnode) != 0 or prule.rhs.degree(pnode) or prule.rhs.boundary(pnode):
            raise IntegrityError(prid, f"cannot prune child at live nonterminal {pnode}")
        prule.rhs.remove_node(pnode)
        del gram.child_at[(prid, pnode)]
        del gram.parent[rid]
        del gram.rules[rid]
        gram.tombstones[rid] = prid
        rid = prid


def _maybe_drop_node(gram: Grammar, w: Node) -> None:
    """Remove the alias of a departed node once it has no edges or slots left."""
    rid = gram.cover_rule.get(w)
    if rid is None:
        return
    node = gram.alias[w]
    rule = gram.rules[rid]
    if rule.rhs.degree(node) or rule.rhs.boundary(node):
        return
    rule.rhs.remove_node(node)
    del gram.cover_rule[w]
    del gram.alias[w]
    _prune_if_empty(gram, rid)


# ---------------------------------------------------------------------------
# the three update procedures
# ---------------------------------------------------------------------------


def apply_internal_addition(gram: Grammar, u: Node, v: Node) -> Grammar:
    """Record a new edge between two already-covered nodes."""
    for w in (u, v):
        if w not in gram.cover_rule:
            raise IntegrityError(None, f"node {w!r} is not covered by the grammar")
    lca = gram.lca_rule(u, v)
    rule = gram.rules[lca]
    a, b = gram.rep(lca, u), gram.rep(lca, v)
    rule.rhs.add_edge(a, b)
    anchors_add(rule.anchors, a, b, (u, v))
    _adjust_chain_down(gram, lca, u, +1)
    if u != v:
        _adjust_chain_down(gram, lca, v, +1)
    return gram


def apply_deletion(
    gram: Grammar, u: Node, v: Node, u_survives: bool, v_survives: bool
) -> Grammar:
    """Remove one recorded edge unit; drop departed endpoints that emptied."""
    for w in (u, v):
        if w not in gram.cover_rule:
            raise IntegrityError(None, f"node {w!r} is not covered by the grammar")
    lca = gram.lca_rule(u, v)
    rule = gram.rules[lca]
    a, b = gram.rep(lca, u), gram.rep(lca, v)
    if not anchors_remove(rule.anchors, a, b, (u, v)):
        raise IntegrityError(lca, f"edge ({u!r}, {v!r}) is not recorded on ({a}, {b})")
    rule.rhs.remove_edge(a, b)
    _adjust_chain_down(gram, lca, u, -1)
    if u != v:
        _adjust_chain_down(gram, lca, v, -1)
    if not u_survives:
        _maybe_drop_node(gram, u)
    if not v_survives and v != u:
        _maybe_drop_node(gram, v)
    return gram


def extract_connected(g: LabeledMultigraph, mu: int, seed: int) -> Grammar:
    """Cluster a connected graph and extract its grammar."""
    dendro = hierarchical_cluster(g, seed)
    return extract_grammar(g, dendrogram_to_filtration(dendro), mu, seed)


def _remap_into(gram: Grammar, sub: Grammar) -> tuple[int, list[int]]:
    """Copy sub's rules into gram under fresh rule ids; returns (root, ids)."""
    offset = gram._next_rule_id
    created = []
    for rid in sorted(sub.rules):
        rule = sub.rules[rid]
        clone = rule.copy()
        clone.rule_id = rid + offset
        gram.add_rule(clone)
        created.append(rid + offset)
    for child, (p, node) in sub.parent.items():
        gram.parent[child + offset] = (p + offset, node)
        gram.child_at[(p + offset, node)] = child + offset
    for w, rid in sub.cover_rule.items():
        if w in gram.cover_rule:
            raise IntegrityError(rid + offset, f"node {w!r} is already covered")
        gram.cover_rule[w] = rid + offset
        gram.alias[w] = sub.alias[w]
    return sub.root_id + offset, created


def merge_grammars(
    gram: Grammar, sub: Grammar, frontier: list[tuple[Node, Node]]
) -> list[int]:
    """Join a subgrammar under a fresh root rule bridged by the frontier edges.

    Frontier pairs are oriented (covered node, subgrammar node). With an empty
    frontier the new root holds two disconnected zero-symbol nonterminals.
    """
    old_root = gram.root_id
    sub_root, created = _remap_into(gram, sub)
    for u_old, v_new in sorted(frontier, key=lambda e: (_sort_key(e[0]), _sort_key(e[1]))):
        _bump_boundary_up(gram, u_old)
        _bump_boundary_up(gram, v_new)

    merge_rid = gram.new_rule_id()
    rhs = LabeledMultigraph()
    rhs.add_node(0, gram.rules[old_root].lhs, 0)
    rhs.add_node(1, gram.rules[sub_root].lhs, 0)
    anchors: dict = {}
    for u_old, v_new in sorted(frontier, key=lambda e: (_sort_key(e[0]), _sort_key(e[1]))):
        rhs.add_edge(0, 1)
        anchors_add(anchors, 0, 1, (u_old, v_new))
    merge_rule = Rule(merge_rid, 0, rhs, anchors)
    gram.add_rule(merge_rule)
    gram.parent[old_root] = (merge_rid, 0)
    gram.child_at[(merge_rid, 0)] = old_root
    gram.parent[sub_root] = (merge_rid, 1)
    gram.child_at[(merge_rid, 1)] = sub_root
    gram.root_id = merge_rid
    created.append(merge_rid)
    return created


def apply_frontier_external(
    gram: Grammar,
    component: LabeledMultigraph,
    frontier: list[tuple[Node, Node]],
    mu: int,
    seed: int,
) -> list[int]:
    """Fold one connected region of new nodes into the grammar.

    A fresh subgrammar is extracted on the component; each frontier edge adds
    a boundary slot on both sides (propagated up to the roots) before a merge
    rule with |frontier| bridging edges becomes the new grammar root.
    """
    for w in component.nodes():
        if w in gram.cover_rule:
            raise ValueError(f"component node {w!r} already exists in the grammar")
    for u_old, v_new in frontier:
        if u_old not in gram.cover_rule or not component.has_node(v_new):
            raise ValueError(f"frontier edge ({u_old!r}, {v_new!r}) does not bridge the component")
    sub = extract_connected(component, mu, seed)
    return merge_grammars(gram, sub, frontier)


# ---------------------------------------------------------------------------
# whole-snapshot extraction and the full update
# ---------------------------------------------------------------------------


def extract_snapshot_grammar(g: LabeledMultigraph, mu: int, seed: int) -> Grammar:
    """Extract per connected component, merging components under shared roots."""
    if g.node_count == 0:
        raise ValueError("cannot extract a grammar from an empty snapshot")
    comps = connected_components(g)
    gram = extract_connected(g.induced(comps[0]), mu, derive_seed(seed, "component", 0))
    for i, comp in enumerate(comps[1:], start=1):
        sub = extract_connected(g.induced(comp), mu, derive_seed(seed, "component", i))
        merge_grammars(gram, sub, [])
    gram.gram_filtration = _grammar_filtration(gram)
    gram.check_invariants()
    return gram


def update_grammar(
    grammar_t: Grammar,
    g_t: LabeledMultigraph,
    g_t1: LabeledMultigraph,
    mu: int,
    seed: int,
) -> tuple[Grammar, UpdateReport]:
    """Transform a grammar of g_t into one of g_t1; reports the correspondence.

    Deletions run first, then internal additions, then one merge per connected
    component of new nodes. Per-rule edit costs compare deep pre-update copies
    against the updated rules; rules created by merging have empty preimages.
    Snapshots must be simple graphs (edge classification is presence-based);
    multigraph edits live at the rule level via the apply_* procedures.
    """
    if g_t1.node_count == 0:
        raise ValueError("cannot update toward an empty snapshot")
    for snap in (g_t, g_t1):
        for u, v, m in snap.edges():
            if m != 1:
                raise ValueError(
                    f"snapshot edge ({u!r}, {v!r}) has multiplicity {m}; "
                    "snapshots must be simple graphs"
                )
    gram = grammar_t.copy()
    before = {rid: rule.copy() for rid, rule in gram.rules.items()}
    classes = classify_edges(g_t, g_t1)
    counts = {cls.value: 0 for cls in EdgeClass}
    for cls in classes.values():
        counts[cls.value] += 1

    v_t1 = set(g_t1.nodes())
    deletions = sorted(
        (e for e, c in classes.items() if c is EdgeClass.DELETION),
        key=lambda e: (_sort_key(e[0]), _sort_key(e[1])),
    )
    for u, v in deletions:
        apply_deletion(gram, u, v, u in v_t1, v in v_t1)
    for w in sorted(set(g_t.nodes()) - v_t1, key=_sort_key):
        _maybe_drop_node(gram, w)

    internal = sorted(
        (e for e, c in classes.items() if c is EdgeClass.INTERNAL_ADDITION),
        key=lambda e: (_sort_key(e[0]), _sort_key(e[1])),
    )
    for u, v in internal:
        apply_internal_addition(gram, u, v)

    created: list[int] = []
    new_nodes = v_t1 - set(g_t.nodes())
    if new_nodes:
        frontier_all = [e for e, c in classes.items() if c is EdgeClass.FRONTIER_ADDITION]
        region = g_t1.induced(new_nodes)
        for i, comp in enumerate(connected_components(region)):
            comp_set = set(comp)
            comp_graph = g_t1.induced(comp)
            frontier = []
            for a, b in frontier_all:
                if a in comp_set:
                    frontier.append((b, a))
                elif b in comp_set:
                    frontier.append((a, b))
            frontier.sort(key=lambda e: (_sort_key(e[0]), _sort_key(e[1])))
            sub_seed = derive_seed(seed, "merge", i)
            root_rule = gram.rules[gram.root_id]
            if root_rule.rhs.node_count == 0:
                # complete turnover: the first new component replaces the grammar
                if frontier:
                    raise IntegrityError(gram.root_id, "frontier edges into an emptied grammar")
                dead_root = gram.root_id
                del gram.rules[dead_root]
                sub = extract_connected(comp_graph, gram.mu, sub_seed)
                sub_root, sub_created = _remap_into(gram, sub)
                gram.root_id = sub_root
                gram.tombstones[dead_root] = sub_root
                created.extend(sub_created)
            else:
                created.extend(
                    apply_frontier_external(gram, comp_graph, frontier, mu, sub_seed)
                )
    elif gram.rules[gram.root_id].rhs.node_count == 0:
        raise IntegrityError(gram.root_id, "update emptied the grammar entirely")

    def resolve(rid: int) -> int:
        while rid not in gram.rules:
            rid = gram.tombstones[rid]
        return rid

    correspondence = {rid: resolve(rid) for rid in before}
    preimages: dict[int, list[Rule]] = {rid: [] for rid in gram.rules}
    for old_rid, new_rid in correspondence.items():
        preimages[new_rid].append(before[old_rid])

    per_rule_edits: dict[int, float] = {}
    for rid in sorted(gram.rules):
        rule = gram.rules[rid]
        pres = preimages[rid]
        if not pres:
            old_rhs, old_lhs = None, 0
        elif len(pres) == 1:
            old_rhs, old_lhs = pres[0].rhs, pres[0].lhs
        else:
            old_rhs = disjoint_union([p.rhs for p in sorted(pres, key=lambda r: r.rule_id)])
            old_lhs = sum(p.lhs for p in pres)
        per_rule_edits[rid] = graph_edit_distance(old_rhs, rule.rhs, old_lhs, rule.lhs)

    gram.gram_filtration = _grammar_filtration(gram)
    gram.check_invariants()
    report = UpdateReport(
        correspondence=correspondence,
        created_rules=sorted(created),
        per_rule_edits=per_rule_edits,
        edge_class_counts=counts,
        before_rules=before,
        after_rules={rid: rule.copy() for rid, rule in gram.rules.items()},
    )
    return gram, report


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------


def report_to_dict(report: UpdateReport, name_of=str) -> dict:
    return {
        "correspondence": {str(k): v for k, v in sorted(report.correspondence.items())},
        "created_rules": list(report.created_rules),
        "per_rule_edits": {str(k): v for k, v in sorted(report.per_rule_edits.items())},
        "edge_class_counts": dict(sorted(report.edge_class_counts.items())),
        "before_rules": [rule_to_dict(report.before_rules[r], name_of) for r in sorted(report.before_rules)],
        "after_rules": [rule_to_dict(report.after_rules[r], name_of) for r in sorted(report.after_rules)],
    }


def report_from_dict(doc: dict, node_of=None) -> UpdateReport:
    return UpdateReport(
        correspondence={int(k): v for k, v in doc["correspondence"].items()},
        created_rules=list(doc["created_rules"]),
        per_rule_edits={int(k): float(v) for k, v in doc["per_rule_edits"].items()},
        edge_class_counts=dict(doc["edge_class_counts"]),
        before_rules={r["rule_id"]: rule_from_dict(r, node_of) for r in doc["before_rules"]},
        after_rules={r["rule_id"]: rule_from_dict(r, node_of) for r in doc["after_rules"]},
    )
