"""Tests for the laminar-family solver pipeline."""
from __future__ import annotations

import random

import pytest

from rpsp.core import (
    ObjectiveMode,
    ValidationError,
    brute_force,
    evaluate,
    make_instance,
)
from rpsp.laminar import (
    PENALTY,
    REWARD,
    LaminarTree,
    add_representation_leaves,
    build_circulation,
    build_containment_dag,
    circulation_to_dot,
    contract_reward_leaf,
    delete_penalty_leaf,
    generate_laminar,
    irreducible_core,
    is_laminar,
    is_nice,
    max_profit_circulation,
    solve_laminar,
    swap_equal_leaf,
    to_nice_tree,
    tree_to_dot,
    tree_to_instance,
    verify_circulation,
)

HIT = ObjectiveMode.HIT_REWARD_COVER_PENALTY
COVER = ObjectiveMode.COVER_REWARD_HIT_PENALTY


def build_tree(ground, layout):
    """layout: list of (members, kind, weight, parent position or None)."""
    tree = LaminarTree(frozenset(ground))
    ids = []
    for members, kind, weight, parent in layout:
        pid = ids[parent] if parent is not None else None
        ids.append(tree.add_node(members, kind, weight, pid))
    return tree, ids


def closure(count, arcs):
    reach = {i: set() for i in range(count)}
    for i in range(count):
        stack = [j for (u, j) in arcs if u == i]
        while stack:
            j = stack.pop()
            if j in reach[i]:
                continue
            reach[i].add(j)
            stack.extend(k for (u, k) in arcs if u == j)
    return reach


class TestIsLaminar:
    def test_nested_plus_disjoint(self):
        assert is_laminar([{1, 2}, {1, 2, 3}, {4}]) is True

    def test_crossing_pair(self):
        assert is_laminar([{1, 2}, {2, 3}]) is False

    def test_two_nested_chains(self):
        family = [{1, 2}, {1, 2, 3}, {1, 2, 3, 4, 5}, {6, 7}, {6, 7, 8, 9}]
        assert is_laminar(family) is True


class TestIrreducibleCore:
    def fig_tree_instance(self):
        return make_instance(
            6,
            rewards=[({1, 2, 3, 4, 5, 6}, 4), ({1}, 2), ({3}, 1), ({5}, 7)],
            penalties=[({1, 2}, 3), ({3, 4, 5}, 5)],
            mode=HIT,
        )

    def test_transitive_arcs_removed(self):
        inst = self.fig_tree_instance()
        dag = build_containment_dag(inst)
        # reward 0 contains everything: 5 arcs; the two penalties cover one
        # reward each; the three arcs from reward 0 to the inner rewards are
        # transitive through the penalties
        assert len(dag.arcs) == 8
        tree = irreducible_core(dag)
        edges = {
            (tree.nodes[n.parent].members, n.members)
            for n in tree.nodes.values()
            if n.parent is not None
        }
        big = frozenset({1, 2, 3, 4, 5, 6})
        assert edges == {
            (big, frozenset({1, 2})),
            (big, frozenset({3, 4, 5})),
            (frozenset({1, 2}), frozenset({1})),
            (frozenset({3, 4, 5}), frozenset({3})),
            (frozenset({3, 4, 5}), frozenset({5})),
        }
        assert tree.structural_issues() == []

    def test_chain(self):
        inst = make_instance(3, rewards=[({1, 2, 3}, 1), ({1, 2}, 1), ({1}, 1)], mode=HIT)
        tree = irreducible_core(build_containment_dag(inst))
        depth = {}
        for node in tree.nodes.values():
            d = 0
            cur = node
            while cur.parent is not None:
                cur = tree.nodes[cur.parent]
                d += 1
            depth[node.members] = d
        assert depth == {
            frozenset({1, 2, 3}): 0,
            frozenset({1, 2}): 1,
            frozenset({1}): 2,
        }

    def test_disjoint_sets_star_under_virtual_root(self):
        inst = make_instance(4, rewards=[({1}, 1), ({2}, 1)], penalties=[({3, 4}, 2)], mode=HIT)
        tree = irreducible_core(build_containment_dag(inst))
        root = tree.nodes[tree.root]
        assert root.members == frozenset({1, 2, 3, 4})
        assert root.kind == REWARD and root.weight == 0
        assert len(root.children) == 3

    def test_duplicate_sets_rejected(self):
        inst = make_instance(3, rewards=[({1, 2}, 1), ({1, 2}, 5)], mode=HIT)
        with pytest.raises(ValidationError):
            build_containment_dag(inst)

    def test_equal_cross_kind_sets_allowed(self):
        inst = make_instance(2, rewards=[({1, 2}, 1)], penalties=[({1, 2}, 5)], mode=HIT)
        tree = irreducible_core(build_containment_dag(inst))
        root = tree.nodes[tree.root]
        assert root.kind == REWARD
        child = tree.nodes[root.children[0]]
        assert child.kind == PENALTY and child.members == root.members

    def test_reachability_and_minimality(self):
        for seed in range(40):
            inst = generate_laminar(n=random.Random(seed).randint(1, 10), seed=seed)
            dag = build_containment_dag(inst)
            tree = irreducible_core(dag)
            kept = set()
            by_members_kind = {}
            for node in tree.nodes.values():
                by_members_kind[(node.members, node.kind)] = node
            index_of = {}
            for i, e in enumerate(dag.entries):
                index_of[id(e)] = i
            # map tree edges back onto dag node indices
            entry_index = {
                (e.members, e.kind): i for i, e in enumerate(dag.entries)
            }
            for node in tree.nodes.values():
                if node.parent is None:
                    continue
                parent = tree.nodes[node.parent]
                pkey = (parent.members, parent.kind)
                ckey = (node.members, node.kind)
                if pkey in entry_index and ckey in entry_index:
                    kept.add((entry_index[pkey], entry_index[ckey]))
            full = closure(len(dag.entries), dag.arcs)
            reduced = closure(len(dag.entries), kept)
            assert full == reduced
            for arc in kept:
                weaker = closure(len(dag.entries), kept - {arc})
                assert weaker != full


class TestRewrites:
    def test_contract_leaf_under_root(self):
        tree, ids = build_tree(
            range(1, 4),
            [({1, 2, 3}, REWARD, 5, None), ({1, 2}, REWARD, 3, 0)],
        )
        before = brute_force(tree_to_instance(tree))
        contract_reward_leaf(tree, ids[1])
        leaf = [n for n in tree.nodes.values() if n.parent is not None]
        assert len(leaf) == 1
        assert leaf[0].members == frozenset({1}) and leaf[0].weight == 3
        assert tree.nodes[tree.root].weight == 5
        assert brute_force(tree_to_instance(tree)).value == before.value == 8

    def test_contract_drops_interior_penalty_and_reparents(self):
        tree, ids = build_tree(
            range(1, 7),
            [
                ({1, 2, 3, 4, 5, 6}, REWARD, 1, None),
                ({1, 2, 3, 4}, PENALTY, 9, 0),
                ({1, 2}, REWARD, 4, 1),
                ({3, 4}, REWARD, 6, 1),
            ],
        )
        before = brute_force(tree_to_instance(tree)).value
        contract_reward_leaf(tree, ids[2])
        members = {n.members for n in tree.nodes.values()}
        assert frozenset({1, 2, 3, 4}) not in members  # interior penalty gone
        assert frozenset({1}) in members  # contracted leaf
        assert frozenset({3, 4}) in members  # orphan kept
        orphan = next(n for n in tree.nodes.values() if n.members == frozenset({3, 4}))
        assert orphan.parent == tree.root
        assert brute_force(tree_to_instance(tree)).value == before

    def test_contract_root_relabels_in_place(self):
        tree, ids = build_tree(range(1, 4), [({1, 2, 3}, REWARD, 7, None)])
        contract_reward_leaf(tree, ids[0])
        assert tree.nodes[tree.root].members == frozenset({1})
        assert tree.nodes[tree.root].weight == 7

    def test_delete_wide_penalty_leaf(self):
        tree, ids = build_tree(
            range(1, 4),
            [({1, 2, 3}, REWARD, 2, None), ({1, 2}, PENALTY, 9, 0)],
        )
        before = brute_force(tree_to_instance(tree)).value
        delete_penalty_leaf(tree, ids[1])
        assert len(tree.nodes) == 1
        assert brute_force(tree_to_instance(tree)).value == before

    def test_delete_rejects_singleton_penalty(self):
        tree, ids = build_tree(
            range(1, 3),
            [({1, 2}, REWARD, 2, None), ({1}, PENALTY, 9, 0)],
        )
        with pytest.raises(ValidationError):
            delete_penalty_leaf(tree, ids[1])

    def test_swap_equal_pair(self):
        tree, ids = build_tree(
            range(1, 2),
            [({1}, REWARD, 2, None), ({1}, PENALTY, 9, 0)],
        )
        before = brute_force(tree_to_instance(tree)).value
        swap_equal_leaf(tree, ids[1])
        assert tree.nodes[tree.root].kind == PENALTY
        assert tree.nodes[tree.root].weight == 9
        child = tree.nodes[ids[1]]
        assert child.kind == REWARD and child.weight == 2
        assert brute_force(tree_to_instance(tree)).value == before

    def test_representation_leaves_cover_private_elements(self):
        tree, _ = build_tree(range(1, 3), [({1, 2}, REWARD, 5, None), ({1}, PENALTY, 100, 0)])
        add_representation_leaves(tree)
        leaf_sets = {tree.nodes[nid].members for nid in tree.leaves()}
        # element 2 gains a representative; the singleton penalty gets one too
        assert frozenset({2}) in leaf_sets
        assert frozenset({1}) in leaf_sets

    def test_random_rewrites_preserve_value(self):
        rng = random.Random(12)
        checked = {"delete": 0, "swap": 0, "contract": 0}
        for seed in range(400):
            if min(checked.values()) >= 25:
                break
            inst = generate_laminar(n=rng.randint(2, 9), seed=10_000 + seed)
            if not (inst.reward_sets or inst.penalty_sets):
                continue
            tree = irreducible_core(build_containment_dag(inst))
            for nid in tree.leaves():
                node = tree.nodes[nid]
                work = tree.clone()
                if node.kind == PENALTY and len(node.members) >= 2:
                    action = "delete"
                    delete_penalty_leaf(work, nid)
                elif (
                    node.kind == PENALTY
                    and node.parent is not None
                    and tree.nodes[node.parent].kind == REWARD
                    and tree.nodes[node.parent].members == node.members
                ):
                    action = "swap"
                    swap_equal_leaf(work, nid)
                elif node.kind == REWARD and len(node.members) >= 2:
                    action = "contract"
                    contract_reward_leaf(work, nid)
                else:
                    continue
                before = brute_force(tree_to_instance(tree)).value
                after = (
                    brute_force(tree_to_instance(work)).value if work.nodes else 0.0
                )
                assert after == before, (action, seed)
                checked[action] += 1
        assert min(checked.values()) >= 25


class TestToNiceTree:
    def test_output_is_nice(self):
        for seed in range(60):
            inst = generate_laminar(n=random.Random(seed).randint(1, 10), seed=seed + 300)
            if not (inst.reward_sets or inst.penalty_sets):
                continue
            tree = to_nice_tree(irreducible_core(build_containment_dag(inst)))
            assert is_nice(tree)
            assert tree.structural_issues() == []

    def test_value_preserved(self):
        for seed in range(60):
            inst = generate_laminar(n=random.Random(seed).randint(1, 10), seed=seed + 900)
            if not (inst.reward_sets or inst.penalty_sets):
                continue
            tree = to_nice_tree(irreducible_core(build_containment_dag(inst)))
            target = brute_force(inst).value
            got = brute_force(tree_to_instance(tree)).value if tree.nodes else 0.0
            assert got == target

    def test_idempotent(self):
        inst = generate_laminar(n=9, seed=77)
        first = to_nice_tree(irreducible_core(build_containment_dag(inst)))
        second = to_nice_tree(first)
        assert second.signature() == first.signature()

    def test_wide_penalty_leaf_under_bigger_reward_deleted(self):
        tree, _ = build_tree(
            range(1, 4),
            [({1, 2, 3}, REWARD, 2, None), ({1, 2}, PENALTY, 9, 0)],
        )
        nice = to_nice_tree(tree)
        assert all(node.kind == REWARD for node in nice.nodes.values())


class TestCirculation:
    def nice_pipeline(self, inst):
        return to_nice_tree(irreducible_core(build_containment_dag(inst)))

    def test_arc_anatomy(self):
        inst = make_instance(
            6,
            rewards=[({1, 2, 3, 4, 5, 6}, 4), ({1}, 2), ({3}, 1), ({5}, 7)],
            penalties=[({1, 2}, 3), ({3, 4, 5}, 5)],
            mode=HIT,
        )
        tree = self.nice_pipeline(inst)
        net = build_circulation(tree)
        # four leaves: the original singletons plus a representative for 6;
        # the penalties' private elements interchange with existing leaves
        assert len(net.leaf_arcs) == 4
        assert sorted(e for _k, e in net.leaf_arcs) == [1, 3, 5, 6]
        for k, _element in net.leaf_arcs:
            assert net.arcs[k].tail == net.source
            assert net.arcs[k].capacity == 1 and net.arcs[k].profit == 0
        by_tail = {}
        for arc in net.arcs:
            by_tail.setdefault(arc.tail, []).append(arc)
        p12 = net.labels.index("P[1, 2]")
        pair = sorted(by_tail[p12], key=lambda a: a.profit)
        assert [(a.capacity, a.profit) for a in pair] == [(1, -3.0), (1, 0.0)]
        root = net.labels.index("R[1, 2, 3, 4, 5, 6]")
        root_pair = sorted(by_tail[root], key=lambda a: a.capacity)
        assert [(a.capacity, a.profit) for a in root_pair] == [(1, 4.0), (net.big, 0.0)]
        assert all(a.head == net.sink for a in root_pair)
        back = [a for a in net.arcs if a.tail == net.sink]
        assert [(a.head, a.capacity, a.profit) for a in back] == [(net.source, net.big, 0.0)]

    def test_single_reward_profit(self):
        inst = make_instance(1, rewards=[({1}, 7)], mode=HIT)
        net = build_circulation(self.nice_pipeline(inst))
        profit, flow = max_profit_circulation(net)
        assert profit == 7
        assert verify_circulation(net, flow) == []

    def test_singleton_penalty_zero_capacity_arc(self):
        inst = make_instance(1, penalties=[({1}, 5)], mode=HIT)
        net = build_circulation(self.nice_pipeline(inst))
        pairs = [
            (a.capacity, a.profit)
            for a in net.arcs
            if a.tail == net.labels.index("P[1]")
        ]
        assert sorted(pairs) == [(0, 0.0), (1, -5.0)]
        profit, flow = max_profit_circulation(net)
        assert profit == 0
        assert all(f == 0 for f in flow)

    def test_non_nice_tree_rejected(self):
        tree, _ = build_tree(range(1, 3), [({1, 2}, PENALTY, 1, None)])
        with pytest.raises(ValidationError):
            build_circulation(tree)

    def test_flows_always_feasible(self):
        for seed in range(40):
            inst = generate_laminar(n=random.Random(seed).randint(1, 10), seed=seed + 50)
            if not (inst.reward_sets or inst.penalty_sets):
                continue
            tree = self.nice_pipeline(inst)
            if tree.root is None:
                continue
            net = build_circulation(tree)
            profit, flow = max_profit_circulation(net)
            assert verify_circulation(net, flow) == []
            members = frozenset(e for k, e in net.leaf_arcs if flow[k] == 1)
            assert evaluate(inst, members) == profit


class TestSolveLaminar:
    def test_penalty_blocks_pair(self):
        inst = make_instance(2, rewards=[({1}, 2), ({2}, 3)], penalties=[({1, 2}, 4)], mode=HIT)
        sel = solve_laminar(inst)
        assert sel.value == 3 and sel.members == {2}

    def test_cheap_penalty_absorbed(self):
        inst = make_instance(2, rewards=[({1}, 2), ({2}, 3)], penalties=[({1, 2}, 1)], mode=HIT)
        sel = solve_laminar(inst)
        assert sel.value == 4 and sel.members == {1, 2}

    def test_no_penalties(self):
        inst = make_instance(3, rewards=[({1}, 2), ({2}, 3), ({3}, 4)], mode=HIT)
        assert solve_laminar(inst).value == 9

    def test_empty_instance(self):
        sel = solve_laminar(make_instance(3, mode=HIT))
        assert sel.value == 0 and sel.members == frozenset()

    def test_pure_penalty_instance(self):
        sel = solve_laminar(make_instance(3, penalties=[({1, 2}, 5)], mode=HIT))
        assert sel.value == 0 and sel.members == frozenset()

    def test_equal_reward_penalty_pair(self):
        inst = make_instance(2, rewards=[({1, 2}, 3)], penalties=[({1, 2}, 1)], mode=HIT)
        sel = solve_laminar(inst)
        # choosing one element hits the reward without covering the penalty
        assert sel.value == 3 and len(sel.members) == 1

    def test_non_laminar_rejected(self):
        inst = make_instance(3, rewards=[({1, 2}, 1)], penalties=[({2, 3}, 1)], mode=HIT)
        with pytest.raises(ValidationError):
            solve_laminar(inst)

    def test_wrong_mode_rejected(self):
        inst = make_instance(2, rewards=[({1}, 1)], mode=COVER)
        with pytest.raises(ValidationError):
            solve_laminar(inst)

    def test_duplicate_sets_rejected(self):
        inst = make_instance(2, penalties=[({1}, 1), ({1}, 2)], mode=HIT)
        with pytest.raises(ValidationError):
            solve_laminar(inst)

    def test_matches_brute_force(self):
        rng = random.Random(1234)
        for trial in range(150):
            inst = generate_laminar(n=rng.randint(1, 12), seed=5000 + trial)
            sel = solve_laminar(inst)
            assert sel.value == brute_force(inst).value, (trial, inst)
            assert evaluate(inst, sel.members) == sel.value


class TestGenerator:
    def test_deterministic(self):
        assert generate_laminar(10, seed=4) == generate_laminar(10, seed=4)

    def test_always_laminar_and_distinct(self):
        for seed in range(80):
            inst = generate_laminar(n=random.Random(seed).randint(0, 14), seed=seed)
            family = [ws.members for ws in inst.reward_sets + inst.penalty_sets]
            assert is_laminar(family)
            rewards = [ws.members for ws in inst.reward_sets]
            penalties = [ws.members for ws in inst.penalty_sets]
            assert len(set(rewards)) == len(rewards)
            assert len(set(penalties)) == len(penalties)

    def test_weight_range(self):
        inst = generate_laminar(12, seed=9, max_weight=50)
        for ws in inst.reward_sets + inst.penalty_sets:
            assert 1 <= ws.weight <= 50


class TestDots:
    def test_tree_dump(self):
        inst = make_instance(2, rewards=[({1}, 2), ({2}, 3)], penalties=[({1, 2}, 4)], mode=HIT)
        tree = to_nice_tree(irreducible_core(build_containment_dag(inst)))
        text = tree_to_dot(tree)
        assert text.startswith("digraph") and "P[1, 2]" in text

    def test_circulation_dump(self):
        inst = make_instance(1, rewards=[({1}, 7)], mode=HIT)
        tree = to_nice_tree(irreducible_core(build_containment_dag(inst)))
        text = circulation_to_dot(build_circulation(tree))
        assert "BIG" in text and "(1, 7)" in text
