"""Mining rule transitions across a sequence of grammar updates.

A transition pairs the isomorphism class of a rule before an update with its
class afterward; rules created during merging tally under an empty "before"
key. Unmodified rules count as identity transitions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grammar import Rule, canonical_form
from .temporal import UpdateReport

EMPTY_BEFORE = b"<created>"


@dataclass
class TransitionTally:
    counts: dict[tuple[bytes, bytes], int] = field(default_factory=dict)
    representatives: dict[tuple[bytes, bytes], tuple[Rule | None, Rule]] = field(
        default_factory=dict
    )

    def add(self, before: Rule | None, after: Rule) -> None:
        key = (
            EMPTY_BEFORE if before is None else canonical_form(before),
            canonical_form(after),
        )
        self.counts[key] = self.counts.get(key, 0) + 1
        self.representatives.setdefault(key, (before, after))

    def total(self) -> int:
        return sum(self.counts.values())


def tally_transitions(reports: list[UpdateReport]) -> TransitionTally:
    """Count every (before-class => after-class) pair across the reports."""
    tally = TransitionTally()
    for report in reports:
        if report.correspondence and not report.before_rules:
            raise ValueError("report lacks pre-update rule copies")
        for old_rid, new_rid in sorted(report.correspondence.items()):
            tally.add(report.before_rules[old_rid], report.after_rules[new_rid])
        for rid in report.created_rules:
            tally.add(None, report.after_rules[rid])
    return tally


def top_transitions(
    tally: TransitionTally, k: int
) -> list[tuple[int, Rule | None, Rule]]:
    """The k most frequent transitions; ties break on canonical byte order."""
    if k < 1:
        raise ValueError("k must be positive")
    ranked = sorted(tally.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    out = []
    for key, count in ranked[:k]:
        before, after = tally.representatives[key]
        out.append((count, before, after))
    return out


def _render_rule(rule: Rule | None) -> str:
    if rule is None:
        return "(none)"
    edges = ";".join(f"{a}-{b}x{m}" for a, b, m in rule.rhs.edges())
    return f"lhs={rule.lhs} edges=[{edges or '-'}]"


def transitions_csv(tally: TransitionTally, k: int) -> str:
    rows = ["count,lhs_before,lhs_after,rhs_before_edges,rhs_after_edges"]
    for count, before, after in top_transitions(tally, k):
        lhs_before = "" if before is None else str(before.lhs)
        eb = "" if before is None else ";".join(f"{a}-{b}x{m}" for a, b, m in before.rhs.edges())
        ea = ";".join(f"{a}-{b}x{m}" for a, b, m in after.rhs.edges())
        rows.append(f"{count},{lhs_before},{after.lhs},{eb},{ea}")
    return "\n".join(rows) + "\n"


def transitions_text(tally: TransitionTally, k: int) -> str:
    lines = []
    for count, before, after in top_transitions(tally, k):
        lines.append(f"x{count}: {_render_rule(before)} => {_render_rule(after)}")
    return "\n".join(lines) + "\n"
