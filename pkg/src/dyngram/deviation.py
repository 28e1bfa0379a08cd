"""Exact graph edit distance, deviation scoring, forecasting, impostor ranking.

The deviation score of one grammar update is ln(1 + total per-rule edit
cost): zero when nothing changed, growing with the structural churn the
update had to absorb. A one-step momentum forecast over the score series
lets candidate next-snapshots be ranked by how closely their scores land on
the forecast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graphs import LabeledMultigraph
from .seeding import derive_seed

GED_SIZE_CAP = 12


def graph_edit_distance(
    a: LabeledMultigraph | None,
    b: LabeledMultigraph,
    lhs_a: int = 0,
    lhs_b: int = 0,
    size_cap: int = GED_SIZE_CAP,
) -> float:
    """Minimum-cost edit path between two labeled multigraphs.

    Unit costs for node insertion/deletion, per-multiplicity edge unit
    insertion/deletion, and node label substitution, plus a penalty of
    0.5 per unit of LHS difference. Exact, via depth-first search over
    injective partial node matchings with branch-and-bound pruning;
    boundary degrees do not participate. `a` may be None (empty graph).
    """
    ga = a if a is not None else LabeledMultigraph()
    if ga.node_count > size_cap or b.node_count > size_cap:
        raise ValueError(
            f"graphs of {ga.node_count} and {b.node_count} nodes exceed the "
            f"exact-search bound {size_cap}"
        )
    nodes_a = sorted(ga.nodes(), key=lambda v: (-ga.degree(v), str(v)))
    nodes_b = b.nodes()
    la = {v: ga.label(v) for v in nodes_a}
    lb = {v: b.label(v) for v in nodes_b}
    na, nb = len(nodes_a), len(nodes_b)

    penalty = 0.5 * abs(lhs_a - lhs_b)
    if ga == b:
        return penalty

    best = math.inf
    assigned: list[tuple] = []  # (a_node, b_node | None)
    used: set = set()

    def insertion_cost(unmatched: list) -> int:
        cost = 0
        counted: list = []
        images = [v for _, v in assigned if v is not None]
        for w in unmatched:
            cost += 1 + b.multiplicity(w, w)
            for x in images:
                cost += b.multiplicity(w, x)
            for x in counted:
                cost += b.multiplicity(w, x)
            counted.append(w)
        return cost

    def search(i: int, cost: float) -> None:
        nonlocal best
        if cost + abs((na - i) - (nb - len(used))) >= best:
            return
        if i == na:
            total = cost + insertion_cost([w for w in nodes_b if w not in used])
            if total < best:
                best = total
            return
        u = nodes_a[i]
        for v in nodes_b:
            if v in used:
                continue
            step = (1 if la[u] != lb[v] else 0) + abs(
                ga.multiplicity(u, u) - b.multiplicity(v, v)
            )
            for up, vp in assigned:
                if vp is None:
                    step += ga.multiplicity(u, up)
                else:
                    step += abs(ga.multiplicity(u, up) - b.multiplicity(v, vp))
            assigned.append((u, v))
            used.add(v)
            search(i + 1, cost + step)
            assigned.pop()
            used.discard(v)
        step = 1 + ga.multiplicity(u, u)
        for up, _ in assigned:
            step += ga.multiplicity(u, up)
        assigned.append((u, None))
        search(i + 1, cost + step)
        assigned.pop()

    search(0, 0.0)
    return best + penalty


def deviation_score(report) -> float:
    """ln(1 + total edit cost) of one update; 0 exactly when nothing changed."""
    total = report.total_edits if hasattr(report, "total_edits") else float(report)
    if total < 0:
        raise ValueError("edit totals cannot be negative")
    return math.log1p(total)


def forecast(d: list[float], t: int) -> float:
    """One-step momentum forecast from the mean-score history.

    Requires t >= 2; with A_k the running mean of d[0..k], the forecast is
    A_{t-1} + (d[t-1] - A_{t-2}).
    """
    if t < 2:
        raise ValueError(f"forecast needs t >= 2, got {t}")
    if len(d) < t:
        raise ValueError(f"forecast at t={t} needs d[0..{t - 1}]")
    a_prev = sum(d[:t]) / t
    a_prev2 = sum(d[: t - 1]) / (t - 1)
    return a_prev + (d[t - 1] - a_prev2)


@dataclass
class DeviationSeries:
    """Score series over a snapshot sequence plus per-model rankings."""

    d: list[float] = field(default_factory=list)
    a: list[float] = field(default_factory=list)
    d_hat: dict[int, float] = field(default_factory=dict)
    impostor_scores: dict[str, dict[int, float]] = field(default_factory=dict)
    mean_deltas: dict[str, dict[int, float]] = field(default_factory=dict)
    rankings: dict[int, list[tuple[str, float, float, int]]] = field(default_factory=dict)

    def append_d(self, value: float) -> None:
        self.d.append(value)
        prior = self.a[-1] * (len(self.d) - 1) if self.a else 0.0
        self.a.append((prior + value) / len(self.d))

    def to_csv(self, t_offset: int = 0) -> str:
        """One row per (transition, model); unscored transitions carry blanks."""
        rows = ["t,model,mean_delta,score,rank"]
        for t in range(len(self.d)):
            if t in self.rankings:
                for name, mean_delta, score, rank in self.rankings[t]:
                    rows.append(f"{t + t_offset},{name},{mean_delta:.9f},{score:.9f},{rank}")
            else:
                rows.append(f"{t + t_offset},{GROUND_TRUTH},{self.d[t]:.9f},,")
        return "\n".join(rows) + "\n"


GROUND_TRUTH = "ground_truth"


def _content_key(g: LabeledMultigraph) -> str:
    """Deterministic fingerprint of a snapshot's structure."""
    return repr((g.nodes(), g.edges()))


def impostor_rank(
    g_t: LabeledMultigraph,
    g_t1: LabeledMultigraph,
    candidates: list[tuple[str, LabeledMultigraph]],
    d_hat: float,
    trials: int = 10,
    mu: int = 4,
    seed: int = 0,
) -> list[tuple[str, float, float, int]]:
    """Rank the true next snapshot against named impostors, lowest score first.

    Per trial, a grammar is extracted from g_t and updated once per candidate;
    trial seeds are shared across candidates (common random numbers) and
    update seeds key on candidate content, so two structurally identical
    candidates receive identical scores. Returns rows of
    (name, mean_delta, score, rank).
    """
    from .temporal import extract_snapshot_grammar, update_grammar

    entries = [(GROUND_TRUTH, g_t1)] + list(candidates)
    sums = {name: 0.0 for name, _ in entries}
    for i in range(trials):
        trial_seed = derive_seed(seed, "trial", i)
        gram = extract_snapshot_grammar(g_t, mu, trial_seed)
        for name, snap in entries:
            update_seed = derive_seed(trial_seed, "update", _content_key(snap))
            _, report = update_grammar(gram, g_t, snap, mu, update_seed)
            sums[name] += deviation_score(report)
    rows = []
    for name, _ in entries:
        mean_delta = sums[name] / trials
        rows.append((name, mean_delta, abs(d_hat - mean_delta)))
    rows.sort(key=lambda r: (r[2], r[0]))
    return [(name, mean_delta, score, i + 1) for i, (name, mean_delta, score) in enumerate(rows)]


def evaluate_series(
    snapshots: list[LabeledMultigraph],
    impostors: dict[str, object],
    mu: int = 4,
    trials: int = 10,
    seed: int = 0,
    score_from: int = 1,
) -> DeviationSeries:
    """Score every transition of a snapshot sequence against impostor models.

    `impostors` maps a model name to a sampler called as f(target_snapshot,
    sample_seed) -> graph; samplers are refit per timestep on the true next
    snapshot. Transition t means the pair (snapshots[t], snapshots[t+1]).
    Scores start at t = max(score_from, 1); t = 1 uses the bootstrap forecast
    d_hat = d[0].
    """
    from .temporal import extract_snapshot_grammar, update_grammar

    series = DeviationSeries()
    n_transitions = len(snapshots) - 1
    grammars: dict[tuple[int, int], object] = {}

    for t in range(n_transitions):
        total = 0.0
        for i in range(trials):
            trial_seed = derive_seed(seed, "extract", t, i)
            gram = extract_snapshot_grammar(snapshots[t], mu, trial_seed)
            grammars[(t, i)] = gram
            update_seed = derive_seed(trial_seed, "update", _content_key(snapshots[t + 1]))
            _, report = update_grammar(gram, snapshots[t], snapshots[t + 1], mu, update_seed)
            total += deviation_score(report)
        series.append_d(total / trials)

    for t in range(max(score_from, 1), n_transitions):
        d_hat = series.d[0] if t == 1 else forecast(series.d, t)
        series.d_hat[t] = d_hat
        rows = [(GROUND_TRUTH, series.d[t], abs(d_hat - series.d[t]))]
        for name, sampler in sorted(impostors.items()):
            total = 0.0
            for i in range(trials):
                sample = sampler(snapshots[t + 1], derive_seed(seed, "sample", name, t, i))
                gram = grammars[(t, i)]
                trial_seed = derive_seed(seed, "extract", t, i)
                update_seed = derive_seed(trial_seed, "update", _content_key(sample))
                _, report = update_grammar(gram, snapshots[t], sample, mu, update_seed)
                total += deviation_score(report)
            mean_delta = total / trials
            rows.append((name, mean_delta, abs(d_hat - mean_delta)))
        rows.sort(key=lambda r: (r[2], r[0]))
        series.rankings[t] = [
            (name, mean_delta, score, i + 1) for i, (name, mean_delta, score) in enumerate(rows)
        ]
        for name, mean_delta, score, _ in series.rankings[t]:
            if name != GROUND_TRUTH:
                series.impostor_scores.setdefault(name, {})[t] = score
                series.mean_deltas.setdefault(name, {})[t] = mean_delta
    return series
