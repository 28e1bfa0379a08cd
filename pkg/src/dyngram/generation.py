"""Weighted grammars and stochastic graph generation with random rewiring."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .graphs import LabeledMultigraph
from .grammar import Grammar, Rule, canonical_form

STEP_LIMIT = 10**6


@dataclass
class RuleClass:
    representative: Rule
    frequency: int


@dataclass
class WeightedGrammar:
    """Isomorphism classes of rules with their occurrence frequencies."""

    classes: list[RuleClass] = field(default_factory=list)
    by_lhs: dict[int, list[int]] = field(default_factory=dict)

    def total_frequency(self) -> int:
        return sum(c.frequency for c in self.classes)


def weight_grammar(gram: Grammar) -> WeightedGrammar:
    """Fold rules into isomorphism classes weighted by occurrence count."""
    wg = WeightedGrammar()
    index: dict[bytes, int] = {}
    for rid in sorted(gram.rules):
        rule = gram.rules[rid]
        key = canonical_form(rule)
        if key in index:
            wg.classes[index[key]].frequency += 1
        else:
            index[key] = len(wg.classes)
            wg.classes.append(RuleClass(representative=rule.copy(), frequency=1))
            wg.by_lhs.setdefault(rule.lhs, []).append(index[key])
    return wg


def compatible_classes(wg: WeightedGrammar, symbol: int) -> list[tuple[int, int]]:
    """Class indices usable at a nonterminal symbol, with sampling weights.

    Exact-lhs classes when any exist; otherwise the classes minimizing
    |lhs - symbol| (nearest-rule fallback, smaller lhs on ties).
    """
    if not wg.classes:
        raise ValueError("empty grammar has no compatible classes")
    exact = wg.by_lhs.get(symbol)
    if exact:
        return [(i, wg.classes[i].frequency) for i in exact]
    nearest = min(wg.by_lhs, key=lambda l: (abs(l - symbol), l))
    return [(i, wg.classes[i].frequency) for i in wg.by_lhs[nearest]]


@dataclass
class ReplacementAudit:
    symbol: int
    rule_lhs: int
    broken_edges: int
    wired: int
    slots: int
    dropped: int


def generate(wg: WeightedGrammar, seed: int = 0) -> LabeledMultigraph:
    """Expand nonterminals until none remain; see `generate_audited`."""
    graph, _ = generate_audited(wg, seed)
    return graph


def generate_audited(
    wg: WeightedGrammar, seed: int = 0
) -> tuple[LabeledMultigraph, list[ReplacementAudit]]:
    """Stochastic generation with a per-replacement boundary accounting trail.

    Starts from a uniformly drawn lhs-0 class; each step picks a uniform
    random nonterminal node, samples a compatible class proportionally to
    frequency, and rewires the broken edges uniformly at random into open
    boundary slots without exceeding any node's boundary degree. Surplus
    broken edges beyond the available slots are dropped; unfilled slots stay
    open. The output graph contains terminals only.
    """
    starts = wg.by_lhs.get(0)
    if not starts:
        raise ValueError("grammar has no start class with lhs 0")
    rng = random.Random(seed)

    graph = LabeledMultigraph()
    nonterminals: dict[int, int] = {}  # instance node -> its nonterminal symbol
    counter = [0]

    def instantiate(rule: Rule) -> dict[int, int]:
        mapping = {}
        for v in rule.rhs.nodes():
            iid = counter[0]
            counter[0] += 1
            mapping[v] = iid
            graph.add_node(iid, rule.rhs.label(v), 0)
            if rule.rhs.label(v) is not None:
                nonterminals[iid] = rule.rhs.label(v)
        for a, b, m in rule.rhs.edges():
            graph.add_edge(mapping[a], mapping[b], m)
        return mapping

    start_idx = starts[rng.randrange(len(starts))]
    instantiate(wg.classes[start_idx].representative)

    audits: list[ReplacementAudit] = []
    steps = 0
    while nonterminals:
        steps += 1
        if steps > STEP_LIMIT:
            raise RuntimeError(f"generation exceeded {STEP_LIMIT} replacements")
        x = sorted(nonterminals)[rng.randrange(len(nonterminals))]
        symbol = nonterminals.pop(x)
        options = compatible_classes(wg, symbol)
        weights = [w for _, w in options]
        idx = rng.choices([i for i, _ in options], weights=weights, k=1)[0]
        rule = wg.classes[idx].representative

        broken: list[int] = []  # neighbor per broken edge unit
        for y in graph.neighbors(x):
            if y == x:
                continue
            broken.extend([y] * graph.multiplicity(x, y))
        graph.remove_node(x)
        mapping = instantiate(rule)

        slots: list[int] = []
        for v in rule.rhs.nodes():
            slots.extend([mapping[v]] * rule.rhs.boundary(v))
        rng.shuffle(slots)
        rng.shuffle(broken)
        wired = 0
        for y, slot in zip(broken, slots):
            graph.add_edge(y, slot)
            wired += 1
        audits.append(
            ReplacementAudit(
                symbol=symbol,
                rule_lhs=rule.lhs,
                broken_edges=len(broken),
                wired=wired,
                slots=len(slots),
                dropped=max(0, len(broken) - len(slots)),
            )
        )
    return graph, audits
