import random

import pytest
from hypothesis import given, strategies as st

from dyngram.deviation import deviation_score
from dyngram.graphs import LabeledMultigraph
from dyngram.grammar import IntegrityError, grammar_to_text, replay_derivation
from dyngram.temporal import (
    EdgeClass,
    apply_deletion,
    apply_frontier_external,
    apply_internal_addition,
    classify_edges,
    extract_snapshot_grammar,
    report_from_dict,
    report_to_dict,
    update_grammar,
)

from helpers import graph_from_edges, random_connected_graph, random_snapshot_pair

TWO_TRIANGLES = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3), (1, 4)]


def check_rule_conservation(gram):
    """Every rule: lhs = total boundary; nonterminal symbol = degree + boundary."""
    for rule in gram.rules.values():
        assert rule.lhs == sum(rule.rhs.boundary(v) for v in rule.rhs.nodes())
        for v in rule.rhs.nodes():
            lab = rule.rhs.label(v)
            if lab is not None:
                assert lab == rule.rhs.degree(v) + rule.rhs.boundary(v)


class TestClassify:
    def test_persistent(self):
        g_t = graph_from_edges([("a", "b")])
        assert classify_edges(g_t, g_t.copy()) == {("a", "b"): EdgeClass.PERSISTENT}

    def test_addition_split_by_membership(self):
        g_t = graph_from_edges([("a", "b")])
        g_t1 = graph_from_edges([("a", "b"), ("a", "c"), ("c", "d"), ("d", "e")])
        classes = classify_edges(g_t, g_t1)
        assert classes[("a", "c")] is EdgeClass.FRONTIER_ADDITION
        assert classes[("c", "d")] is EdgeClass.EXTERNAL_ADDITION
        assert classes[("d", "e")] is EdgeClass.EXTERNAL_ADDITION

    def test_deletion(self):
        g_t = graph_from_edges([("a", "b"), ("b", "c")])
        g_t1 = graph_from_edges([("a", "b")])
        assert classify_edges(g_t, g_t1)[("b", "c")] is EdgeClass.DELETION

    def test_internal_addition(self):
        g_t = graph_from_edges([("a", "b"), ("b", "c")])
        g_t1 = graph_from_edges([("a", "b"), ("b", "c"), ("a", "c")])
        assert classify_edges(g_t, g_t1)[("a", "c")] is EdgeClass.INTERNAL_ADDITION

    @given(st.integers(0, 99999))
    def test_partition_property(self, seed):
        rng = random.Random(seed)
        g_t, g_t1 = random_snapshot_pair(rng, rng.randrange(4, 16))
        classes = classify_edges(g_t, g_t1)
        union = {tuple(sorted(e[:2])) for e in g_t.edges()} | {
            tuple(sorted(e[:2])) for e in g_t1.edges()
        }
        assert set(classes) == union  # exactly one class per union edge


class TestInternalAddition:
    def test_same_rule_no_symbol_changes(self):
        from dyngram.clustering import Filtration
        from dyngram.grammar import extract_grammar

        g = graph_from_edges([(0, 1), (1, 2), (2, 3)])
        filt = Filtration(levels=((frozenset({0, 1, 2, 3}),),))
        gram = extract_grammar(g, filt, mu=4, seed=0)
        assert gram.cover_rule[0] == gram.cover_rule[3]  # one rule covers the path
        before_lhs = {rid: r.lhs for rid, r in gram.rules.items()}
        work = gram.copy()
        apply_internal_addition(work, 0, 3)
        assert {rid: r.lhs for rid, r in work.rules.items()} == before_lhs
        check_rule_conservation(work)
        expected = g.copy()
        expected.add_edge(0, 3)
        assert replay_derivation(work) == expected

    def test_cross_rule_addition_bumps_siblings(self):
        g = graph_from_edges([(0, 1), (1, 2), (2, 3)])
        from dyngram.clustering import Filtration
        from dyngram.grammar import extract_grammar

        filt = Filtration(levels=(
            (frozenset({0, 1}), frozenset({2, 3})),
            (frozenset({0, 1, 2, 3}),),
        ))
        gram = extract_grammar(g, filt, mu=2, seed=0)
        r_left = gram.cover_rule[0]
        r_right = gram.cover_rule[3]
        assert gram.rules[r_left].lhs == 1 and gram.rules[r_right].lhs == 1
        apply_internal_addition(gram, 0, 3)
        assert gram.rules[r_left].lhs == 2
        assert gram.rules[r_right].lhs == 2
        check_rule_conservation(gram)
        expected = g.copy()
        expected.add_edge(0, 3)
        assert replay_derivation(gram) == expected

    def test_duplicate_edge_increments_multiplicity(self):
        g = graph_from_edges(TWO_TRIANGLES)
        gram = extract_snapshot_grammar(g, mu=4, seed=3)
        apply_internal_addition(gram, 0, 5)
        apply_internal_addition(gram, 0, 5)
        lca = gram.lca_rule(0, 5)
        a, b = gram.rep(lca, 0), gram.rep(lca, 5)
        assert gram.rules[lca].rhs.multiplicity(a, b) >= 2
        check_rule_conservation(gram)

    def test_uncovered_node_rejected(self):
        g = graph_from_edges([(0, 1), (1, 2)])
        gram = extract_snapshot_grammar(g, mu=3, seed=0)
        with pytest.raises(IntegrityError):
            apply_internal_addition(gram, 0, 99)


class TestFrontierExternal:
    def test_isolated_component_merges_disconnected(self):
        g = graph_from_edges([(0, 1), (1, 2), (0, 2)])
        gram = extract_snapshot_grammar(g, mu=3, seed=0)
        comp = graph_from_edges([(10, 11), (11, 12), (10, 12)])
        apply_frontier_external(gram, comp, [], mu=3, seed=1)
        root = gram.rules[gram.root_id]
        assert root.lhs == 0
        assert root.rhs.node_count == 2
        assert [root.rhs.label(v) for v in root.rhs.nodes()] == [0, 0]
        assert root.rhs.simple_size == 0
        check_rule_conservation(gram)
        expected = g.copy()
        for a, b, _ in comp.edges():
            expected.add_edge(a, b)
        assert replay_derivation(gram) == expected

    def test_single_new_node_frontier(self):
        g = graph_from_edges([(0, 1), (1, 2), (0, 2)])
        gram = extract_snapshot_grammar(g, mu=3, seed=0)
        rule_of_0 = gram.cover_rule[0]
        alias_of_0 = gram.alias[0]
        before_boundary = gram.rules[rule_of_0].rhs.boundary(alias_of_0)
        comp = LabeledMultigraph()
        comp.add_node(7)
        apply_frontier_external(gram, comp, [(0, 7)], mu=3, seed=1)
        root = gram.rules[gram.root_id]
        assert root.rhs.simple_size == 1
        assert root.rhs.multiplicity(0, 1) == 1
        assert gram.rules[rule_of_0].rhs.boundary(alias_of_0) == before_boundary + 1
        check_rule_conservation(gram)
        expected = g.copy()
        expected.add_edge(0, 7)
        assert replay_derivation(gram) == expected

    def test_two_frontier_edges_same_rule_bump_twice(self):
        g = graph_from_edges([(0, 1), (1, 2), (0, 2)])
        gram = extract_snapshot_grammar(g, mu=3, seed=0)
        target = gram.cover_rule[0]
        assert gram.cover_rule[1] == target  # single-rule grammar
        lhs_before = gram.rules[target].lhs
        comp = graph_from_edges([(7, 8)])
        apply_frontier_external(gram, comp, [(0, 7), (1, 8)], mu=3, seed=1)
        assert gram.rules[target].lhs == lhs_before + 2
        check_rule_conservation(gram)
        expected = g.copy()
        expected.add_edge(7, 8)
        expected.add_edge(0, 7)
        expected.add_edge(1, 8)
        assert replay_derivation(gram) == expected

    def test_component_overlap_rejected(self):
        g = graph_from_edges([(0, 1), (1, 2), (0, 2)])
        gram = extract_snapshot_grammar(g, mu=3, seed=0)
        comp = graph_from_edges([(1, 9)])
        with pytest.raises(ValueError):
            apply_frontier_external(gram, comp, [], mu=3, seed=0)


class TestDeletion:
    def test_only_edge_survivors_keep_nodes(self):
        g = graph_from_edges([(0, 1), (1, 2), (2, 3)])
        from dyngram.clustering import Filtration
        from dyngram.grammar import extract_grammar

        filt = Filtration(levels=(
            (frozenset({0, 1}), frozenset({2, 3})),
            (frozenset({0, 1, 2, 3}),),
        ))
        gram = extract_grammar(g, filt, mu=2, seed=0)
        rid = gram.cover_rule[0]
        apply_deletion(gram, 0, 1, True, True)
        rule = gram.rules[rid]
        assert rule.rhs.node_count == 2
        assert rule.rhs.simple_size == 0
        check_rule_conservation(gram)

    def test_node_departs_with_last_edge(self):
        g = graph_from_edges([(0, 1), (1, 2), (0, 2), (2, 3)])
        gram = extract_snapshot_grammar(g, mu=3, seed=0)
        rid = gram.cover_rule[3]
        nodes_before = gram.rules[rid].rhs.node_count
        apply_deletion(gram, 2, 3, True, False)
        assert 3 not in gram.cover_rule
        assert gram.rules[rid].rhs.node_count == nodes_before - 1
        check_rule_conservation(gram)
        expected = graph_from_edges([(0, 1), (1, 2), (0, 2)])
        assert replay_derivation(gram) == expected

    def test_cross_rule_deletion_decrements(self):
        g = graph_from_edges([(0, 1), (1, 2), (2, 3)])
        from dyngram.clustering import Filtration
        from dyngram.grammar import extract_grammar

        filt = Filtration(levels=(
            (frozenset({0, 1}), frozenset({2, 3})),
            (frozenset({0, 1, 2, 3}),),
        ))
        gram = extract_grammar(g, filt, mu=2, seed=0)
        left, right = gram.cover_rule[1], gram.cover_rule[2]
        apply_deletion(gram, 1, 2, True, True)
        assert gram.rules[left].lhs == 0
        assert gram.rules[right].lhs == 0
        root = gram.rules[gram.root_id]
        assert root.rhs.simple_size == 0
        check_rule_conservation(gram)
        expected = graph_from_edges([(0, 1)], nodes=[2, 3])
        expected.add_edge(2, 3)
        assert replay_derivation(gram) == expected

    def test_unrecorded_edge_rejected(self):
        g = graph_from_edges([(0, 1), (1, 2)])
        gram = extract_snapshot_grammar(g, mu=3, seed=0)
        with pytest.raises(IntegrityError):
            apply_deletion(gram, 0, 2, True, True)


class TestUpdate:
    def test_identity_update(self):
        g = graph_from_edges(TWO_TRIANGLES)
        gram = extract_snapshot_grammar(g, mu=4, seed=3)
        updated, report = update_grammar(gram, g, g.copy(), mu=4, seed=1)
        assert report.total_edits == 0
        assert deviation_score(report) == 0.0
        assert sorted(report.correspondence) == sorted(report.correspondence.values())
        assert set(report.correspondence.values()) == set(updated.rules)
        assert not report.created_rules
        check_rule_conservation(updated)

    def test_symbol_grows_on_crossing_addition(self):
        """A rule with two boundary slots gains a third when a new edge crosses it."""
        g = graph_from_edges([(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3), (1, 4)])
        gram = extract_snapshot_grammar(g, mu=3, seed=1)
        rid = gram.cover_rule[0]
        assert gram.rules[rid].lhs == 2
        g_t1 = g.copy()
        g_t1.add_edge(0, 5)  # 0 and 5 covered by different sibling rules
        updated, report = update_grammar(gram, g, g_t1, mu=3, seed=2)
        new_rid = report.correspondence[rid]
        assert updated.rules[new_rid].lhs == 3
        check_rule_conservation(updated)
        assert replay_derivation(updated) == g_t1

    def test_update_report_covers_all_rules(self):
        rng = random.Random(12)
        g_t, g_t1 = random_snapshot_pair(rng, 14)
        gram = extract_snapshot_grammar(g_t, mu=4, seed=5)
        updated, report = update_grammar(gram, g_t, g_t1, mu=4, seed=6)
        assert set(report.per_rule_edits) == set(updated.rules)
        assert set(report.correspondence) == set(gram.rules)
        image = set(report.correspondence.values())
        for rid in updated.rules:
            assert (rid in image) != (rid in report.created_rules)

    def test_randomized_replay_oracle(self):
        rng = random.Random(99)
        for trial in range(25):
            g_t, g_t1 = random_snapshot_pair(rng, rng.randrange(5, 21))
            gram = extract_snapshot_grammar(g_t, mu=4, seed=trial)
            updated, _ = update_grammar(gram, g_t, g_t1, mu=4, seed=trial + 1)
            assert replay_derivation(updated) == g_t1
            check_rule_conservation(updated)

    def test_class_one_only_never_touches_rules(self):
        g = graph_from_edges(TWO_TRIANGLES)
        gram = extract_snapshot_grammar(g, mu=4, seed=3)
        updated, report = update_grammar(gram, g, g.copy(), mu=4, seed=1)
        assert report.edge_class_counts["persistent"] == len(TWO_TRIANGLES)
        assert grammar_to_text(updated) == grammar_to_text(gram)

    def test_complete_turnover(self):
        g_t = graph_from_edges([(0, 1), (1, 2)])
        g_t1 = graph_from_edges([(10, 11), (11, 12), (10, 12)])
        gram = extract_snapshot_grammar(g_t, mu=3, seed=0)
        updated, report = update_grammar(gram, g_t, g_t1, mu=3, seed=1)
        assert replay_derivation(updated) == g_t1
        assert set(report.correspondence) == set(gram.rules)
        check_rule_conservation(updated)

    def test_empty_target_rejected(self):
        g = graph_from_edges([(0, 1)])
        gram = extract_snapshot_grammar(g, mu=2, seed=0)
        with pytest.raises(ValueError):
            update_grammar(gram, g, LabeledMultigraph(), mu=2, seed=0)

    def test_input_grammar_never_mutated(self):
        rng = random.Random(13)
        g_t, g_t1 = random_snapshot_pair(rng, 12)
        gram = extract_snapshot_grammar(g_t, mu=4, seed=2)
        frozen = grammar_to_text(gram)
        update_grammar(gram, g_t, g_t1, mu=4, seed=3)
        assert grammar_to_text(gram) == frozen

    def test_report_round_trip(self):
        rng = random.Random(14)
        g_t, g_t1 = random_snapshot_pair(rng, 10)
        gram = extract_snapshot_grammar(g_t, mu=4, seed=2)
        _, report = update_grammar(gram, g_t, g_t1, mu=4, seed=3)
        doc = report_to_dict(report)
        back = report_from_dict(doc)
        assert back.correspondence == report.correspondence
        assert back.per_rule_edits == report.per_rule_edits
        assert back.edge_class_counts == report.edge_class_counts
        assert report_to_dict(back) == doc
