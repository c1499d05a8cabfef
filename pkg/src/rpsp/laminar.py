"""Polynomial solver for hit-reward instances whose sets form a laminar family.

Pipeline: containment DAG -> irreducible core (transitive reduction, a forest
under laminarity) -> nice tree (every leaf a singleton reward set, obtained by
value-preserving rewrites) -> circulation network -> max-profit circulation ->
selection.

The rewrites are exposed individually so each can be checked against a brute
force oracle in isolation.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .core import (
    VALUE_TOL,
    Instance,
    ObjectiveMode,
    Selection,
    ValidationError,
    WeightedSet,
    evaluate,
    make_instance,
    validate,
)

REWARD = "reward"
PENALTY = "penalty"

_EPS = 1e-9


# ---------------------------------------------------------------------------
# laminarity and the containment DAG
# ---------------------------------------------------------------------------


def is_laminar(sets) -> bool:
    """True iff every pair of sets is disjoint or nested."""
    family = [frozenset(s) for s in sets]
    for a, b in itertools.combinations(family, 2):
        if a & b and not (a <= b or b <= a):
            return False
    return True


@dataclass(frozen=True)
class DagEntry:
    members: frozenset[int]
    kind: str
    weight: float


@dataclass(frozen=True)
class ContainmentDag:
    entries: tuple[DagEntry, ...]
    arcs: frozenset[tuple[int, int]]
    ground: frozenset[int]


def build_containment_dag(instance: Instance) -> ContainmentDag:
    """One node per weighted set, arc u->v iff v's set is contained in u's.

    When a reward set and a penalty set are equal, only the reward->penalty
    arc is kept so containment stays acyclic.
    """
    entries = tuple(
        [DagEntry(ws.members, REWARD, ws.weight) for ws in instance.reward_sets]
        + [DagEntry(ws.members, PENALTY, ws.weight) for ws in instance.penalty_sets]
    )
    _check_distinct(entries)
    arcs = set()
    for i, a in enumerate(entries):
        for j, b in enumerate(entries):
            if i == j or not (b.members <= a.members):
                continue
            if b.members == a.members and not (a.kind == REWARD and b.kind == PENALTY):
                continue
            arcs.add((i, j))
    return ContainmentDag(
        entries=entries,
        arcs=frozenset(arcs),
        ground=frozenset(range(1, instance.n + 1)),
    )


def _check_distinct(entries) -> None:
    for kind in (REWARD, PENALTY):
        seen = set()
        for e in entries:
            if e.kind != kind:
                continue
            if e.members in seen:
                raise ValidationError(f"duplicate {kind} set {sorted(e.members)}")
            seen.add(e.members)


# ---------------------------------------------------------------------------
# tree representation
# ---------------------------------------------------------------------------


@dataclass
class TreeNode:
    ident: int
    members: frozenset[int]
    kind: str
    weight: float
    parent: int | None
    children: list[int]


class LaminarTree:
    """Mutable rooted containment tree over a fixed ground set."""

    def __init__(self, ground: frozenset[int]):
        self.ground = frozenset(ground)
        self.nodes: dict[int, TreeNode] = {}
        self.root: int | None = None
        self._next_id = 0

    def add_node(self, members, kind: str, weight: float, parent: int | None = None) -> int:
        nid = self._next_id
        self._next_id += 1
        self.nodes[nid] = TreeNode(nid, frozenset(members), kind, float(weight), parent, [])
        if parent is None:
            if self.root is not None:
                raise ValidationError("tree already has a root")
            self.root = nid
        else:
            self.nodes[parent].children.append(nid)
        return nid

    def leaves(self) -> list[int]:
        return sorted(nid for nid, node in self.nodes.items() if not node.children)

    def clone(self) -> "LaminarTree":
        other = LaminarTree(self.ground)
        other._next_id = self._next_id
        other.root = self.root
        for nid, node in self.nodes.items():
            other.nodes[nid] = TreeNode(
                nid, node.members, node.kind, node.weight, node.parent, list(node.children)
            )
        return other

    def signature(self) -> frozenset:
        """Structure fingerprint for equality checks in tests."""
        items = []
        for node in self.nodes.values():
            parent = self.nodes[node.parent].members if node.parent is not None else None
            items.append((node.members, node.kind, node.weight, parent))
        return frozenset(items)

    def structural_issues(self) -> list[str]:
        out = []
        for node in self.nodes.values():
            if node.parent is not None:
                pm = self.nodes[node.parent].members
                if not (node.members < pm):
                    if node.members != pm or node.kind == self.nodes[node.parent].kind:
                        out.append(f"node {sorted(node.members)} not below its parent")
            kids = [self.nodes[c].members for c in node.children]
            for a, b in itertools.combinations(kids, 2):
                if a & b:
                    out.append(f"overlapping siblings under {sorted(node.members)}")
        return out


def is_nice(tree: LaminarTree) -> bool:
    """Every leaf is a singleton reward set (vacuously true when empty)."""
    return all(
        tree.nodes[nid].kind == REWARD and len(tree.nodes[nid].members) == 1
        for nid in tree.leaves()
    )


def tree_to_instance(tree: LaminarTree) -> Instance:
    """Read the tree back as an instance (used to oracle-check rewrites)."""
    rewards = []
    penalties = []
    for node in tree.nodes.values():
        target = rewards if node.kind == REWARD else penalties
        target.append((node.members, node.weight))
    return make_instance(len(tree.ground), rewards, penalties, ObjectiveMode.HIT_REWARD_COVER_PENALTY)


def irreducible_core(dag: ContainmentDag) -> LaminarTree:
    """Transitive reduction of the containment DAG, rooted as a tree.

    Reachability is preserved and no remaining arc is removable. A virtual
    root (full ground set, reward, weight 0) is added when the forest has
    several roots.
    """
    _check_distinct(dag.entries)
    count = len(dag.entries)
    succ = {i: {j for (a, j) in dag.arcs if a == i} for i in range(count)}

    reach: dict[int, set[int]] = {}

    def walk(i: int) -> set[int]:
        if i in reach:
            return reach[i]
        acc = set()
        reach[i] = acc  # containment arcs are acyclic, no revisit possible
        for j in succ[i]:
            acc.add(j)
            acc |= walk(j)
        return acc

    for i in range(count):
        walk(i)

    kept = {
        (u, v)
        for (u, v) in dag.arcs
        if not any(w != v and v in reach[w] for w in succ[u])
    }

    parent: dict[int, int] = {}
    for u, v in kept:
        if v in parent:
            raise ValidationError("containment is not laminar: node has two parents")
        parent[v] = u

    tree = LaminarTree(dag.ground)
    if count == 0:
        return tree
    roots = [i for i in range(count) if i not in parent]
    virtual_root = tree.add_node(dag.ground, REWARD, 0.0, None) if len(roots) > 1 else None
    ids: dict[int, int] = {}
    # insert nodes top-down so parents exist first
    pending = list(roots)
    while pending:
        i = pending.pop()
        entry = dag.entries[i]
        pid = ids[parent[i]] if i in parent else virtual_root
        ids[i] = tree.add_node(entry.members, entry.kind, entry.weight, pid)
        pending.extend(v for (u, v) in kept if u == i)
    return tree


# ---------------------------------------------------------------------------
# value-preserving rewrites toward a nice tree
# ---------------------------------------------------------------------------


def delete_penalty_leaf(tree: LaminarTree, nid: int) -> None:
    """Drop a penalty leaf with at least two elements.

    Covering it would require choosing several elements of a leaf set, and
    any one of them already hits every ancestor reward, so an optimal
    selection never completes the set.
    """
    node = tree.nodes[nid]
    if node.children or node.kind != PENALTY or len(node.members) < 2:
        raise ValidationError("rewrite needs a penalty leaf with >= 2 elements")
    if node.parent is None:
        tree.root = None
    else:
        tree.nodes[node.parent].children.remove(nid)
    del tree.nodes[nid]


def swap_equal_leaf(tree: LaminarTree, nid: int) -> None:
    """Swap a penalty leaf with its equal-set reward parent.

    Both nodes carry the same member set, so the underlying instance is
    untouched; only the tree positions trade places, making the reward the
    leaf.
    """
    node = tree.nodes[nid]
    if node.children or node.kind != PENALTY or node.parent is None:
        raise ValidationError("rewrite needs a penalty leaf below its equal reward set")
    parent = tree.nodes[node.parent]
    if parent.kind != REWARD or parent.members != node.members:
        raise ValidationError("rewrite needs a penalty leaf below its equal reward set")
    node.kind, parent.kind = parent.kind, node.kind
    node.weight, parent.weight = parent.weight, node.weight


def contract_reward_leaf(tree: LaminarTree, nid: int) -> None:
    """Contract the path from a multi-element reward leaf up to the root.

    One chosen element of the leaf set hits every reward on the path, and no
    penalty on the path can be completed when the rest of the leaf set stays
    unchosen, so the path collapses into a singleton reward leaf carrying the
    summed path rewards (the surviving root keeps its own weight). Subtrees
    hanging off interior path nodes are re-attached to the root.
    """
    node = tree.nodes[nid]
    if node.children or node.kind != REWARD or len(node.members) < 2:
        raise ValidationError("rewrite needs a reward leaf with >= 2 elements")
    fresh = frozenset({min(node.members)})
    if node.parent is None:
        node.members = fresh
        return
    path = [nid]
    while tree.nodes[path[-1]].parent is not None:
        path.append(tree.nodes[path[-1]].parent)
    root = path[-1]
    summed = sum(tree.nodes[x].weight for x in path[:-1] if tree.nodes[x].kind == REWARD)
    orphans = [
        child
        for x in path[1:-1]
        for child in tree.nodes[x].children
        if child not in path
    ]
    for x in path[:-1]:
        del tree.nodes[x]
    tree.nodes[root].children = [c for c in tree.nodes[root].children if c not in path]
    for child in orphans:
        tree.nodes[child].parent = root
        tree.nodes[root].children.append(child)
    tree.add_node(fresh, REWARD, summed, root)


def add_representation_leaves(tree: LaminarTree) -> None:
    """Give every node with privately-owned elements a zero-weight singleton
    reward child, so each choosable element is reachable from some leaf.

    Private elements of a node are interchangeable (they sit in exactly the
    same sets), hence one representative per node suffices; an existing
    singleton reward leaf child already plays that role because sibling sets
    are disjoint.
    """

    def is_reward_singleton_leaf(nid: int) -> bool:
        node = tree.nodes[nid]
        return not node.children and node.kind == REWARD and len(node.members) == 1

    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        covered = frozenset().union(*(tree.nodes[c].members for c in node.children)) if node.children else frozenset()
        private = node.members - covered
        if not private:
            continue
        if is_reward_singleton_leaf(nid):
            continue
        if any(is_reward_singleton_leaf(c) for c in node.children):
            continue
        tree.add_node({min(private)}, REWARD, 0.0, nid)


def to_nice_tree(tree: LaminarTree) -> LaminarTree:
    """Rewrite until every leaf is a singleton reward set.

    Wide penalty leaves are deleted, equal-set penalty/reward pairs swapped,
    wide reward leaves path-contracted; finally every node keeping private
    elements gets a zero-weight representative leaf. Running the function on
    its own output changes nothing.
    """
    work = tree.clone()
    while work.root is not None:
        leaves = work.leaves()
        target = next(
            (
                nid
                for nid in leaves
                if work.nodes[nid].kind == PENALTY and len(work.nodes[nid].members) >= 2
            ),
            None,
        )
        if target is not None:
            delete_penalty_leaf(work, target)
            continue
        target = next(
            (
                nid
                for nid in leaves
                if work.nodes[nid].kind == PENALTY
                and work.nodes[nid].parent is not None
                and work.nodes[work.nodes[nid].parent].kind == REWARD
                and work.nodes[work.nodes[nid].parent].members == work.nodes[nid].members
            ),
            None,
        )
        if target is not None:
            swap_equal_leaf(work, target)
            continue
        target = next(
            (
                nid
                for nid in leaves
                if work.nodes[nid].kind == REWARD and len(work.nodes[nid].members) >= 2
            ),
            None,
        )
        if target is not None:
            contract_reward_leaf(work, target)
            continue
        break
    if work.root is not None:
        add_representation_leaves(work)
    assert is_nice(work)
    return work


# ---------------------------------------------------------------------------
# circulation network
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircArc:
    tail: int
    head: int
    capacity: int
    profit: float


@dataclass(frozen=True)
class CirculationNetwork:
    num_nodes: int
    source: int
    sink: int
    arcs: tuple[CircArc, ...]
    big: int
    leaf_arcs: tuple[tuple[int, int], ...]  # (arc index of the s->leaf arc, element)
    labels: tuple[str, ...]


def build_circulation(tree: LaminarTree) -> CirculationNetwork:
    """Circulation network of a nice tree.

    Source feeds each leaf (capacity 1, profit 0). Every node sends flow to
    its parent (the root to the sink) over a parallel arc pair keyed by the
    node's own kind: rewards offer (1, +weight) and (BIG, 0); a penalty over
    set B offers (|B|-1, 0) and (1, -weight), so only full coverage is forced
    onto the paying arc. The sink returns all flow to the source.
    """
    if tree.root is None or not is_nice(tree):
        raise ValidationError("circulation needs a nice tree")
    order = sorted(tree.nodes)
    index = {nid: i + 2 for i, nid in enumerate(order)}
    source, sink = 0, 1
    labels = ["s", "t"] + [
        f"{'R' if tree.nodes[nid].kind == REWARD else 'P'}{sorted(tree.nodes[nid].members)}"
        for nid in order
    ]
    leaf_count = len(tree.leaves())
    big = leaf_count + 1

    arcs: list[CircArc] = []
    leaf_arcs: list[tuple[int, int]] = []
    for nid in tree.leaves():
        (element,) = tree.nodes[nid].members
        leaf_arcs.append((len(arcs), element))
        arcs.append(CircArc(source, index[nid], 1, 0.0))
    for nid in order:
        node = tree.nodes[nid]
        up = index[node.parent] if node.parent is not None else sink
        if node.kind == REWARD:
            arcs.append(CircArc(index[nid], up, 1, node.weight))
            arcs.append(CircArc(index[nid], up, big, 0.0))
        else:
            arcs.append(CircArc(index[nid], up, len(node.members) - 1, 0.0))
            arcs.append(CircArc(index[nid], up, 1, -node.weight))
    arcs.append(CircArc(sink, source, big, 0.0))

    return CirculationNetwork(
        num_nodes=2 + len(order),
        source=source,
        sink=sink,
        arcs=tuple(arcs),
        big=big,
        leaf_arcs=tuple(leaf_arcs),
        labels=tuple(labels),
    )


def max_profit_circulation(net: CirculationNetwork) -> tuple[float, tuple[int, ...]]:
    """Integral max-profit circulation by canceling negative cycles of the
    cost (= negated profit) residual network."""
    m = len(net.arcs)
    flow = [0] * m

    def residual():
        out = []
        for k, arc in enumerate(net.arcs):
            if flow[k] < arc.capacity:
                out.append((arc.tail, arc.head, -arc.profit, k, +1))
            if flow[k] > 0:
                out.append((arc.head, arc.tail, arc.profit, k, -1))
        return out

    while True:
        res = residual()
        dist = [0.0] * net.num_nodes
        pred = [-1] * net.num_nodes
        last = -1
        for _ in range(net.num_nodes):
            last = -1
            for j, (u, v, cost, _k, _d) in enumerate(res):
                if dist[u] + cost < dist[v] - _EPS:
                    dist[v] = dist[u] + cost
                    pred[v] = j
                    last = v
            if last < 0:
                break
        if last < 0:
            break
        x = last
        for _ in range(net.num_nodes):
            x = res[pred[x]][0]
        cycle = []
        v = x
        while True:
            j = pred[v]
            cycle.append(j)
            v = res[j][0]
            if v == x:
                break
        bottleneck = min(
            (net.arcs[res[j][3]].capacity - flow[res[j][3]]) if res[j][4] > 0 else flow[res[j][3]]
            for j in cycle
        )
        assert bottleneck > 0
        for j in cycle:
            _u, _v, _c, k, d = res[j]
            flow[k] += d * bottleneck

    profit = sum(flow[k] * net.arcs[k].profit for k in range(m))
    return profit, tuple(flow)


def verify_circulation(net: CirculationNetwork, flow) -> list[str]:
    """Conservation, capacity and integrality check; empty list when valid."""
    out = []
    balance = [0] * net.num_nodes
    for k, arc in enumerate(net.arcs):
        f = flow[k]
        if f != int(f):
            out.append(f"arc {k} carries fractional flow {f}")
        if not (0 <= f <= arc.capacity):
            out.append(f"arc {k} flow {f} outside [0, {arc.capacity}]")
        balance[arc.tail] -= f
        balance[arc.head] += f
    for v, b in enumerate(balance):
        if b != 0:
            out.append(f"node {v} violates conservation by {b}")
    return out


# ---------------------------------------------------------------------------
# end-to-end solver
# ---------------------------------------------------------------------------


def solve_laminar(instance: Instance) -> Selection:
    """Exact optimum for a laminar hit-reward instance."""
    if instance.mode is not ObjectiveMode.HIT_REWARD_COVER_PENALTY:
        raise ValidationError("laminar solver handles the hit-reward objective only")
    issues = validate(instance)
    if issues:
        raise ValidationError("; ".join(issues))
    family = [ws.members for ws in instance.reward_sets + instance.penalty_sets]
    if not is_laminar(family):
        raise ValidationError("the reward and penalty sets are not laminar")
    if not family:
        return Selection(members=frozenset(), value=0.0)

    tree = to_nice_tree(irreducible_core(build_containment_dag(instance)))
    if tree.root is None:
        return Selection(members=frozenset(), value=0.0)
    net = build_circulation(tree)
    profit, flow = max_profit_circulation(net)
    members = frozenset(element for k, element in net.leaf_arcs if flow[k] == 1)
    value = evaluate(instance, members)
    assert abs(value - profit) <= VALUE_TOL * max(1.0, abs(value)), (
        "circulation profit disagrees with the extracted selection"
    )
    return Selection(members=members, value=value)


# ---------------------------------------------------------------------------
# random laminar instances
# ---------------------------------------------------------------------------


def generate_laminar(n: int, seed: int = 0, max_weight: int = 100) -> Instance:
    """Random laminar hit-reward instance: recursively partition a shuffled
    ground set into nested blocks, each block independently labeled reward,
    penalty, both, or structural-only."""
    rng = random.Random(seed)
    rewards: list[tuple[frozenset[int], float]] = []
    penalties: list[tuple[frozenset[int], float]] = []

    def visit(block: list[int], is_ground: bool) -> None:
        fs = frozenset(block)
        roll = rng.random()
        if is_ground and rng.random() < 0.8:
            roll = 1.0  # the full ground set itself is rarely labeled
        if roll < 0.35:
            rewards.append((fs, rng.randint(1, max_weight)))
        elif roll < 0.6:
            penalties.append((fs, rng.randint(1, max_weight)))
        elif roll < 0.7:
            rewards.append((fs, rng.randint(1, max_weight)))
            penalties.append((fs, rng.randint(1, max_weight)))
        if len(block) >= 2 and rng.random() < 0.85:
            cut_count = rng.randint(1, len(block) - 1)
            cuts = sorted(rng.sample(range(1, len(block)), cut_count))
            bounds = [0] + cuts + [len(block)]
            for lo, hi in zip(bounds, bounds[1:]):
                visit(block[lo:hi], False)

    if n > 0:
        elements = list(range(1, n + 1))
        rng.shuffle(elements)
        visit(elements, True)
    return make_instance(n, rewards, penalties, ObjectiveMode.HIT_REWARD_COVER_PENALTY)


# ---------------------------------------------------------------------------
# debug dumps
# ---------------------------------------------------------------------------


def tree_to_dot(tree: LaminarTree) -> str:
    lines = ["digraph tree {"]
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        tag = "R" if node.kind == REWARD else "P"
        lines.append(f'  n{nid} [label="{tag}{sorted(node.members)} w={node.weight:g}"];')
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        if node.parent is not None:
            lines.append(f"  n{node.parent} -> n{nid};")
    lines.append("}")
    return "\n".join(lines)


def circulation_to_dot(net: CirculationNetwork) -> str:
    lines = ["digraph circulation {"]
    for i, label in enumerate(net.labels):
        lines.append(f'  n{i} [label="{label}"];')
    for arc in net.arcs:
        cap = "BIG" if arc.capacity >= net.big else str(arc.capacity)
        lines.append(
            f'  n{arc.tail} -> n{arc.head} [label="({cap}, {arc.profit:g})"];'
        )
    lines.append("}")
    return "\n".join(lines)
