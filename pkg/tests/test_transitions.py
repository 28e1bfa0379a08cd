import random

import pytest

from dyngram.grammar import canonical_form
from dyngram.temporal import UpdateReport, extract_snapshot_grammar, update_grammar
from dyngram.transitions import (
    EMPTY_BEFORE,
    tally_transitions,
    top_transitions,
    transitions_csv,
    transitions_text,
)

from helpers import graph_from_edges, random_connected_graph, random_snapshot_pair
from test_grammar import make_rule


def single_rule_report(before, after, created=False):
    if created:
        return UpdateReport(
            correspondence={},
            created_rules=[after.rule_id],
            per_rule_edits={after.rule_id: 1.0},
            edge_class_counts={},
            before_rules={},
            after_rules={after.rule_id: after},
        )
    return UpdateReport(
        correspondence={before.rule_id: after.rule_id},
        created_rules=[],
        per_rule_edits={after.rule_id: 0.0},
        edge_class_counts={},
        before_rules={before.rule_id: before},
        after_rules={after.rule_id: after},
    )


def path_rule(rid, n):
    return make_rule(0, [(i, None, 0) for i in range(n)], [(i, i + 1) for i in range(n - 1)], rid)


class TestTally:
    def test_identity_updates_give_identity_keys(self):
        g = graph_from_edges([(0, 1), (1, 2), (0, 2), (2, 3)])
        gram = extract_snapshot_grammar(g, mu=3, seed=0)
        reports = []
        for seed in range(3):
            _, report = update_grammar(gram, g, g.copy(), mu=3, seed=seed)
            reports.append(report)
        tally = tally_transitions(reports)
        assert all(before == after for before, after in tally.counts)

    def test_repeated_growth_transition_counted(self):
        """One transition type repeated 61 times among 100 reports."""
        grow_before, grow_after = path_rule(0, 2), path_rule(1, 3)
        same = path_rule(2, 4)
        reports = []
        for i in range(100):
            if i < 61:
                reports.append(single_rule_report(grow_before, grow_after))
            else:
                reports.append(single_rule_report(same, same))
        tally = tally_transitions(reports)
        key = (canonical_form(grow_before), canonical_form(grow_after))
        assert tally.counts[key] == 61
        top = top_transitions(tally, 1)
        assert top[0][0] == 61
        assert canonical_form(top[0][1]) == canonical_form(grow_before)

    def test_isomorphic_befores_share_key(self):
        a_before = make_rule(0, [(0, None, 0), (1, None, 0)], [(0, 1)], 0)
        b_before = make_rule(0, [(5, None, 0), (9, None, 0)], [(9, 5)], 1)
        after_a = path_rule(2, 3)
        after_b = path_rule(3, 3)
        tally = tally_transitions(
            [single_rule_report(a_before, after_a), single_rule_report(b_before, after_b)]
        )
        assert len(tally.counts) == 1
        assert tally.total() == 2

    def test_created_rules_use_empty_before(self):
        created = path_rule(7, 2)
        tally = tally_transitions([single_rule_report(None, created, created=True)])
        ((before_key, _),) = tally.counts
        assert before_key == EMPTY_BEFORE

    def test_missing_before_copies_rejected(self):
        bad = UpdateReport(
            correspondence={0: 0},
            created_rules=[],
            per_rule_edits={0: 0.0},
            edge_class_counts={},
            before_rules={},
            after_rules={0: path_rule(0, 2)},
        )
        with pytest.raises(ValueError):
            tally_transitions([bad])

    def test_count_sum_invariant(self):
        rng = random.Random(3)
        reports = []
        total_pairs = 0
        for trial in range(6):
            g_t, g_t1 = random_snapshot_pair(rng, 12)
            gram = extract_snapshot_grammar(g_t, mu=4, seed=trial)
            _, report = update_grammar(gram, g_t, g_t1, mu=4, seed=trial)
            reports.append(report)
            total_pairs += len(report.correspondence) + len(report.created_rules)
        assert tally_transitions(reports).total() == total_pairs

    def test_relabeling_invariance(self):
        rng = random.Random(4)
        g_t, g_t1 = random_snapshot_pair(rng, 10)
        gram = extract_snapshot_grammar(g_t, mu=4, seed=9)
        _, report = update_grammar(gram, g_t, g_t1, mu=4, seed=9)
        tally_a = tally_transitions([report])

        shift = 1000
        g_t_shift = graph_from_edges([(u + shift, v + shift, m) for u, v, m in g_t.edges()])
        g_t1_shift = graph_from_edges([(u + shift, v + shift, m) for u, v, m in g_t1.edges()])
        for v in g_t1.nodes():
            if not g_t1_shift.has_node(v + shift):
                g_t1_shift.add_node(v + shift)
        gram_shift = extract_snapshot_grammar(g_t_shift, mu=4, seed=9)
        _, report_shift = update_grammar(gram_shift, g_t_shift, g_t1_shift, mu=4, seed=9)
        tally_b = tally_transitions([report_shift])
        assert tally_a.counts == tally_b.counts


class TestTop:
    def test_k_larger_than_keys(self):
        r = single_rule_report(path_rule(0, 2), path_rule(1, 2))
        tally = tally_transitions([r])
        assert len(top_transitions(tally, 50)) == 1

    def test_deterministic_tiebreak(self):
        r1 = single_rule_report(path_rule(0, 2), path_rule(1, 2))
        r2 = single_rule_report(path_rule(0, 3), path_rule(1, 3))
        tally = tally_transitions([r1, r2])
        a = top_transitions(tally, 2)
        b = top_transitions(tally, 2)
        assert [(c, canonical_form(x), canonical_form(y)) for c, x, y in a] == [
            (c, canonical_form(x), canonical_form(y)) for c, x, y in b
        ]

    def test_rejects_bad_k(self):
        tally = tally_transitions([])
        with pytest.raises(ValueError):
            top_transitions(tally, 0)

    def test_render_outputs(self):
        r = single_rule_report(path_rule(0, 2), path_rule(1, 3))
        tally = tally_transitions([r])
        csv = transitions_csv(tally, 5)
        assert csv.startswith("count,lhs_before,lhs_after,rhs_before_edges,rhs_after_edges")
        text = transitions_text(tally, 5)
        assert "=>" in text and "x1" in text
