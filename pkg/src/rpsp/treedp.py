"""Tree-decomposition dynamic program for singleton-reward instances.

The reduced connection graph has one reward node per player and one node per
penalty set, joined by membership edges. Over a nice tree decomposition of
that graph the solver runs the classic leaf/introduce/forget/join recurrences.

Table semantics: an entry C_i(S, n) is the best profit of a selection M of
reward nodes in the graph induced by bag i and everything below it, where
M meets the bag exactly in S, and for each penalty node P still in the bag the
coordinate n_P counts M's already-forgotten neighbors of P. Only forgotten
penalty nodes are charged (all their neighbors selected); in-bag adjacencies
are recomputed from S at the moment a penalty is forgotten, so joins can split
coordinates without double counting.

Decomposition text format (byte-exact grammar, shared with the graph format
in ``special``):

    c <comment>                        zero or more, anywhere
    s td <#bags> <max-bag-size> <#nodes>
    b <bag-id> <v1> ... <vk>           exactly #bags lines, ids 1..#bags
    <i> <j>                            exactly #bags-1 tree edge lines

Vertices are 1-based. ``max-bag-size`` is width+1.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

from .core import (
    VALUE_TOL,
    FormatError,
    InfeasibleConfigError,
    Instance,
    ObjectiveMode,
    Selection,
    SizeLimitError,
    ValidationError,
    evaluate,
    make_instance,
    validate,
)

NEG_INF = -math.inf


# ---------------------------------------------------------------------------
# reduced connection graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReducedConnectionGraph:
    """Bipartite graph: players as reward nodes 1..n, penalty sets as nodes
    n+1..n+l, edges for membership."""

    reward_nodes: tuple[int, ...]
    penalty_nodes: tuple[int, ...]
    reward_weight: dict[int, float]
    penalty_weight: dict[int, float]
    penalty_members: dict[int, frozenset[int]]
    edges: tuple[tuple[int, int], ...]

    @property
    def nodes(self) -> tuple[int, ...]:
        return self.reward_nodes + self.penalty_nodes

    def neighbors(self, v: int) -> frozenset[int]:
        if v in self.penalty_members:
            return self.penalty_members[v]
        return frozenset(p for p in self.penalty_nodes if v in self.penalty_members[p])

    def is_penalty(self, v: int) -> bool:
        return v in self.penalty_members


def build_reduced_graph(instance: Instance) -> ReducedConnectionGraph:
    """Collapse singleton rewards onto player nodes (summing duplicates,
    weight 0 for reward-less players) and attach one node per penalty set."""
    if instance.mode is not ObjectiveMode.HIT_REWARD_COVER_PENALTY:
        raise ValidationError("reduced graph applies to the hit-reward objective only")
    issues = validate(instance)
    if issues:
        raise ValidationError("; ".join(issues))
    reward_weight = {v: 0.0 for v in range(1, instance.n + 1)}
    for ws in instance.reward_sets:
        if len(ws.members) != 1:
            raise ValidationError("reward sets must be singletons for the tree DP")
        (v,) = ws.members
        reward_weight[v] += ws.weight
    penalty_weight: dict[int, float] = {}
    penalty_members: dict[int, frozenset[int]] = {}
    edges: list[tuple[int, int]] = []
    for j, ws in enumerate(instance.penalty_sets):
        node = instance.n + 1 + j
        penalty_weight[node] = ws.weight
        penalty_members[node] = ws.members
        edges.extend((member, node) for member in sorted(ws.members))
    return ReducedConnectionGraph(
        reward_nodes=tuple(range(1, instance.n + 1)),
        penalty_nodes=tuple(sorted(penalty_weight)),
        reward_weight=reward_weight,
        penalty_weight=penalty_weight,
        penalty_members=penalty_members,
        edges=tuple(edges),
    )


# ---------------------------------------------------------------------------
# tree decompositions
# ---------------------------------------------------------------------------


@dataclass
class TreeDecomposition:
    """Bags over graph nodes connected by tree edges.

    A nice decomposition additionally carries ``root`` and per-bag ``kinds``:
    ("leaf", None), ("introduce", v), ("forget", v) or ("join", None).
    """

    bags: dict[int, frozenset[int]]
    edges: tuple[tuple[int, int], ...]
    root: int | None = None
    kinds: dict[int, tuple[str, int | None]] | None = None

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags.values()), default=0) - 1

    def is_nice(self) -> bool:
        return self.kinds is not None and self.root is not None

    def children_map(self) -> dict[int, list[int]]:
        if self.root is None:
            raise ValidationError("decomposition is not rooted")
        adj: dict[int, list[int]] = {b: [] for b in self.bags}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        out: dict[int, list[int]] = {b: [] for b in self.bags}
        seen = {self.root}
        queue = [self.root]
        while queue:
            cur = queue.pop()
            for nxt in sorted(adj[cur]):
                if nxt not in seen:
                    seen.add(nxt)
                    out[cur].append(nxt)
                    queue.append(nxt)
        return out


def _structure_issues(decomp: TreeDecomposition, nodes, edges) -> list[str]:
    out = []
    bag_ids = set(decomp.bags)
    if not bag_ids:
        return ["decomposition has no bags"]
    for a, b in decomp.edges:
        if a not in bag_ids or b not in bag_ids:
            out.append(f"tree edge ({a},{b}) references a missing bag")
            return out
    if len(decomp.edges) != len(bag_ids) - 1:
        out.append("bag tree must have exactly #bags-1 edges")
    adj: dict[int, set[int]] = {b: set() for b in bag_ids}
    for a, b in decomp.edges:
        adj[a].add(b)
        adj[b].add(a)
    start = next(iter(bag_ids))
    seen = {start}
    queue = [start]
    while queue:
        cur = queue.pop()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    if seen != bag_ids:
        out.append("bag tree is disconnected")
        return out
    covered = set().union(*decomp.bags.values()) if decomp.bags else set()
    for v in nodes:
        if v not in covered:
            out.append(f"node {v} appears in no bag")
    for u, v in edges:
        if not any(u in bag and v in bag for bag in decomp.bags.values()):
            out.append(f"edge ({u},{v}) is inside no bag")
    for v in nodes:
        holding = [b for b, bag in decomp.bags.items() if v in bag]
        if not holding:
            continue
        reach = {holding[0]}
        queue = [holding[0]]
        while queue:
            cur = queue.pop()
            for nxt in adj[cur]:
                if nxt in decomp.bags and v in decomp.bags[nxt] and nxt not in reach:
                    reach.add(nxt)
                    queue.append(nxt)
        if reach != set(holding):
            out.append(f"bags containing node {v} are not connected")
    return out


def check_decomposition(decomp: TreeDecomposition, nodes, edges) -> list[str]:
    """Node coverage, edge coverage, path condition and tree shape for an
    arbitrary graph given as node and edge lists."""
    return _structure_issues(decomp, nodes, edges)


def validate_decomposition(graph: ReducedConnectionGraph, decomp: TreeDecomposition) -> list[str]:
    """Node coverage, edge coverage, path condition and tree shape."""
    return check_decomposition(decomp, graph.nodes, graph.edges)


class _NiceBuilder:
    def __init__(self) -> None:
        self.bags: list[frozenset[int]] = []
        self.kinds: list[tuple[str, int | None]] = []
        self.children: list[list[int]] = []

    def add(self, bag, kind: str, node: int | None, children: list[int]) -> int:
        self.bags.append(frozenset(bag))
        self.kinds.append((kind, node))
        self.children.append(list(children))
        return len(self.bags) - 1

    def chain(self, below: int, src: frozenset[int], dst: frozenset[int]) -> int:
        """Forget src-only nodes, then introduce dst-only ones, one per bag."""
        cur_id, cur_bag = below, src
        for v in sorted(src - dst):
            cur_bag = cur_bag - {v}
            cur_id = self.add(cur_bag, "forget", v, [cur_id])
        for v in sorted(dst - src):
            cur_bag = cur_bag | {v}
            cur_id = self.add(cur_bag, "introduce", v, [cur_id])
        return cur_id

    def fresh_leaf_chain(self, bag: frozenset[int]) -> int:
        order = sorted(bag)
        cur = self.add({order[0]}, "leaf", None, [])
        acc = {order[0]}
        for v in order[1:]:
            acc.add(v)
            cur = self.add(set(acc), "introduce", v, [cur])
        return cur

    def to_decomposition(self, root: int) -> TreeDecomposition:
        edges = tuple(
            (parent, child)
            for parent, kids in enumerate(self.children)
            for child in kids
        )
        return TreeDecomposition(
            bags={i: b for i, b in enumerate(self.bags)},
            edges=edges,
            root=root,
            kinds={i: k for i, k in enumerate(self.kinds)},
        )


def make_nice(decomp: TreeDecomposition, graph: ReducedConnectionGraph | None = None) -> TreeDecomposition:
    """Rebuild a decomposition into nice form without changing its width.

    Leaves become single-node bags reached by introduce chains, neighbors
    differing by several nodes get forget/introduce chains, and bags with
    several children are binarized with join bags.
    """
    if graph is not None:
        issues = validate_decomposition(graph, decomp)
    else:
        issues = _structure_issues(decomp, [], [])
    if issues:
        raise ValidationError("; ".join(issues))

    bags = dict(decomp.bags)
    edges = list(decomp.edges)
    # peel empty leaf bags; they carry no information
    while len(bags) > 1:
        degree: dict[int, int] = {b: 0 for b in bags}
        for a, b in edges:
            degree[a] += 1
            degree[b] += 1
        victim = next(
            (b for b in sorted(bags) if not bags[b] and degree[b] <= 1), None
        )
        if victim is None:
            break
        bags.pop(victim)
        edges = [(a, b) for a, b in edges if victim not in (a, b)]
    if len(bags) == 1 and not next(iter(bags.values())):
        raise ValidationError("decomposition covers no nodes")

    adj: dict[int, list[int]] = {b: [] for b in bags}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    root_bag = max(sorted(bags), key=lambda b: len(bags[b]))
    builder = _NiceBuilder()

    def build(bag_id: int, parent: int | None) -> int:
        bag = bags[bag_id]
        kids = [k for k in sorted(adj[bag_id]) if k != parent]
        if not kids:
            return builder.fresh_leaf_chain(bag)
        tops = []
        for kid in kids:
            sub = build(kid, bag_id)
            tops.append(builder.chain(sub, bags[kid], bag))
        while len(tops) > 1:
            merged = builder.add(bag, "join", None, [tops[0], tops[1]])
            tops = [merged] + tops[2:]
        return tops[0]

    root = build(root_bag, None)
    nice = builder.to_decomposition(root)
    assert nice.width <= decomp.width
    if graph is not None:
        leftover = validate_decomposition(graph, nice)
        assert not leftover, leftover
    return nice


# ---------------------------------------------------------------------------
# DP tables
# ---------------------------------------------------------------------------


@dataclass
class DPTable:
    bag: frozenset[int]
    penalty_order: tuple[int, ...]
    entries: dict[tuple[frozenset[int], tuple[int, ...]], float] = field(default_factory=dict)
    back: dict[tuple[frozenset[int], tuple[int, ...]], tuple] = field(default_factory=dict)

    def value(self, selected, degrees=()) -> float:
        return self.entries.get((frozenset(selected), tuple(degrees)), NEG_INF)


def _sorted_items(table: DPTable):
    return sorted(table.entries.items(), key=lambda kv: (sorted(kv[0][0]), kv[0][1]))


def _offer(table: DPTable, key, value: float, info: tuple) -> None:
    cur = table.entries.get(key)
    if cur is None or value > cur:
        table.entries[key] = value
        table.back[key] = info


def dp_leaf(graph: ReducedConnectionGraph, v: int) -> DPTable:
    """Table of a single-node bag."""
    if graph.is_penalty(v):
        table = DPTable(bag=frozenset({v}), penalty_order=(v,))
        table.entries[(frozenset(), (0,))] = 0.0
        table.back[(frozenset(), (0,))] = ("leaf",)
        return table
    table = DPTable(bag=frozenset({v}), penalty_order=())
    table.entries[(frozenset(), ())] = 0.0
    table.entries[(frozenset({v}), ())] = graph.reward_weight[v]
    table.back[(frozenset(), ())] = ("leaf",)
    table.back[(frozenset({v}), ())] = ("leaf",)
    return table


def dp_introduce(graph: ReducedConnectionGraph, child: DPTable, v: int) -> DPTable:
    """Extend the child's table with a node new to the bag.

    A valid decomposition cannot have forgotten any neighbor of v yet, so an
    introduced penalty starts its coordinate at 0 and an introduced selected
    reward charges nothing.
    """
    if v in child.bag:
        raise ValidationError(f"node {v} is already in the bag")
    bag = child.bag | {v}
    if graph.is_penalty(v):
        order = tuple(sorted(child.penalty_order + (v,)))
        pos = order.index(v)
        table = DPTable(bag=bag, penalty_order=order)
        for (sel, vec), val in _sorted_items(child):
            new_vec = vec[:pos] + (0,) + vec[pos:]
            _offer(table, (sel, new_vec), val, ("move", (sel, vec)))
        return table
    table = DPTable(bag=bag, penalty_order=child.penalty_order)
    for (sel, vec), val in _sorted_items(child):
        _offer(table, (sel, vec), val, ("move", (sel, vec)))
        _offer(table, (sel | {v}, vec), val + graph.reward_weight[v], ("move", (sel, vec)))
    return table


def dp_forget(graph: ReducedConnectionGraph, child: DPTable, v: int) -> DPTable:
    """Drop a node from the bag.

    A selected reward bumps the coordinate of each adjacent in-bag penalty.
    A penalty is the single charge point: its final degree is the tracked
    count plus its selected in-bag neighbors, and only a full neighborhood
    costs its weight.
    """
    if v not in child.bag:
        raise ValidationError(f"node {v} is not in the bag")
    bag = child.bag - {v}
    if graph.is_penalty(v):
        pos = child.penalty_order.index(v)
        order = child.penalty_order[:pos] + child.penalty_order[pos + 1 :]
        members = graph.penalty_members[v]
        table = DPTable(bag=bag, penalty_order=order)
        for (sel, vec), val in _sorted_items(child):
            final_degree = vec[pos] + len(members & sel)
            charge = graph.penalty_weight[v] if final_degree == len(members) else 0.0
            key = (sel, vec[:pos] + vec[pos + 1 :])
            _offer(table, key, val - charge, ("move", (sel, vec)))
        return table
    bumps = tuple(
        1 if v in graph.penalty_members[p] else 0 for p in child.penalty_order
    )
    table = DPTable(bag=bag, penalty_order=child.penalty_order)
    for (sel, vec), val in _sorted_items(child):
        if v in sel:
            key = (sel - {v}, tuple(a + b for a, b in zip(vec, bumps)))
            _offer(table, key, val, ("collect", (sel, vec), v))
        else:
            _offer(table, (sel, vec), val, ("move", (sel, vec)))
    return table


def dp_join(graph: ReducedConnectionGraph, left: DPTable, right: DPTable) -> DPTable:
    """Merge two subtrees sharing the same bag.

    Coordinates add up (the forgotten regions are disjoint) and the rewards
    of the shared selection are subtracted once.
    """
    if left.bag != right.bag or left.penalty_order != right.penalty_order:
        raise ValidationError("join requires identical child bags")
    caps = tuple(len(graph.penalty_members[p]) for p in left.penalty_order)
    table = DPTable(bag=left.bag, penalty_order=left.penalty_order)
    right_by_sel: dict[frozenset[int], list[tuple[tuple[int, ...], float]]] = {}
    for (sel, vec), val in _sorted_items(right):
        right_by_sel.setdefault(sel, []).append((vec, val))
    for (sel, vec_l), val_l in _sorted_items(left):
        shared = sum(graph.reward_weight[u] for u in sel)
        for vec_r, val_r in right_by_sel.get(sel, ()):
            vec = tuple(a + b for a, b in zip(vec_l, vec_r))
            assert all(c <= cap for c, cap in zip(vec, caps))
            _offer(
                table,
                (sel, vec),
                val_l + val_r - shared,
                ("join", (sel, vec_l), (sel, vec_r)),
            )
    return table


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


@dataclass
class DPRun:
    decomp: TreeDecomposition
    tables: dict[int, DPTable]
    below: dict[int, frozenset[int]]
    root: int


def _append_root_forgets(nice: TreeDecomposition) -> TreeDecomposition:
    bags = dict(nice.bags)
    kinds = dict(nice.kinds or {})
    edges = list(nice.edges)
    cur = nice.root
    cur_bag = bags[cur]
    next_id = max(bags) + 1
    for v in sorted(cur_bag):
        cur_bag = cur_bag - {v}
        bags[next_id] = cur_bag
        kinds[next_id] = ("forget", v)
        edges.append((next_id, cur))
        cur = next_id
        next_id += 1
    return TreeDecomposition(bags=bags, edges=tuple(edges), root=cur, kinds=kinds)


def run_dp(graph: ReducedConnectionGraph, nice: TreeDecomposition) -> DPRun:
    """Evaluate all tables bottom-up; the root is extended by a forget chain
    so its table collapses to the single key (empty set, ())."""
    if not nice.is_nice():
        raise ValidationError("run_dp needs a nice decomposition")
    full = _append_root_forgets(nice)
    children = full.children_map()
    tables: dict[int, DPTable] = {}
    below: dict[int, frozenset[int]] = {}
    order: list[int] = []
    stack = [(full.root, False)]
    while stack:
        bag, expanded = stack.pop()
        if expanded:
            order.append(bag)
            continue
        stack.append((bag, True))
        stack.extend((c, False) for c in children[bag])
    for bag in order:
        kind, node = full.kinds[bag]
        kids = children[bag]
        if kind == "leaf":
            (v,) = full.bags[bag]
            tables[bag] = dp_leaf(graph, v)
            below[bag] = frozenset()
        elif kind == "introduce":
            (c,) = kids
            if graph.is_penalty(node):
                assert not (graph.penalty_members[node] & below[c]), (
                    "introduced penalty already lost a neighbor; decomposition invalid"
                )
            tables[bag] = dp_introduce(graph, tables[c], node)
            below[bag] = below[c]
        elif kind == "forget":
            (c,) = kids
            tables[bag] = dp_forget(graph, tables[c], node)
            below[bag] = below[c] | {node}
        else:
            c1, c2 = kids
            tables[bag] = dp_join(graph, tables[c1], tables[c2])
            below[bag] = below[c1] | below[c2]
        assert frozenset(tables[bag].bag) == full.bags[bag]
    return DPRun(decomp=full, tables=tables, below=below, root=full.root)


def _reconstruct(run: DPRun) -> frozenset[int]:
    children = run.decomp.children_map()
    chosen: set[int] = set()
    stack: list[tuple[int, tuple]] = [(run.root, (frozenset(), ()))]
    while stack:
        bag, key = stack.pop()
        info = run.tables[bag].back[key]
        tag = info[0]
        if tag == "leaf":
            continue
        if tag == "move":
            stack.append((children[bag][0], info[1]))
        elif tag == "collect":
            chosen.add(info[2])
            stack.append((children[bag][0], info[1]))
        else:
            c1, c2 = children[bag]
            stack.append((c1, info[1]))
            stack.append((c2, info[2]))
    return frozenset(chosen)


def solve_treedp(instance: Instance, decomp: TreeDecomposition) -> Selection:
    """Exact optimum of a singleton-reward instance over a decomposition of
    its reduced connection graph."""
    graph = build_reduced_graph(instance)
    if not graph.nodes:
        return Selection(members=frozenset(), value=0.0)
    issues = validate_decomposition(graph, decomp)
    if issues:
        raise ValidationError("; ".join(issues))
    nice = decomp if decomp.is_nice() else make_nice(decomp, graph)
    run = run_dp(graph, nice)
    optimum = run.tables[run.root].entries[(frozenset(), ())]
    chosen = _reconstruct(run)
    members = frozenset(v for v in chosen if not graph.is_penalty(v))
    value = evaluate(instance, members)
    assert abs(value - optimum) <= VALUE_TOL * max(1.0, abs(value)), (
        "table optimum disagrees with the reconstructed selection"
    )
    return Selection(members=members, value=value)


# ---------------------------------------------------------------------------
# exact decomposer (test-scale) and instance generator
# ---------------------------------------------------------------------------


def exact_decomposition(nodes, edges, cap: int = 20) -> TreeDecomposition:
    """Minimum-width tree decomposition by branch-and-bound over elimination
    orders. Only for small graphs (test support)."""
    node_list = sorted(set(nodes))
    if len(node_list) > cap:
        raise SizeLimitError(f"{len(node_list)} nodes exceed the exact decomposer cap {cap}")
    if not node_list:
        return TreeDecomposition(bags={0: frozenset()}, edges=(), root=None, kinds=None)
    base_adj: dict[int, set[int]] = {v: set() for v in node_list}
    for u, v in edges:
        if u != v:
            base_adj[u].add(v)
            base_adj[v].add(u)

    def order_for_width(k: int) -> list[int] | None:
        dead: set[frozenset[int]] = set()

        def search(adj: dict[int, set[int]]) -> list[int] | None:
            if len(adj) <= k + 1:
                return sorted(adj)
            state = frozenset(adj)
            if state in dead:
                return None
            for v in sorted(adj):
                if len(adj[v]) > k:
                    continue
                nxt = {u: set(s) for u, s in adj.items() if u != v}
                for a, b in itertools.combinations(sorted(adj[v]), 2):
                    nxt[a].add(b)
                    nxt[b].add(a)
                for u in adj[v]:
                    nxt[u].discard(v)
                rest = search(nxt)
                if rest is not None:
                    return [v] + rest
            dead.add(state)
            return None

        return search({u: set(s) for u, s in base_adj.items()})

    order = None
    for k in range(len(node_list)):
        order = order_for_width(k)
        if order is not None:
            width = k
            break
    assert order is not None

    # replay the elimination to collect bags, then attach each bag to one
    # that contains the eliminated vertex's neighborhood clique
    adj = {u: set(s) for u, s in base_adj.items()}
    records: list[tuple[int, frozenset[int]]] = []
    for v in order:
        if len(adj) <= width + 1:
            break
        records.append((v, frozenset(adj[v])))
        for a, b in itertools.combinations(sorted(adj[v]), 2):
            adj[a].add(b)
            adj[b].add(a)
        for u in adj[v]:
            adj[u].discard(v)
        del adj[v]
    bags: dict[int, frozenset[int]] = {0: frozenset(adj)}
    tree_edges: list[tuple[int, int]] = []
    for v, nv in reversed(records):
        host = next(b for b, bag in bags.items() if nv <= bag)
        new_id = len(bags)
        bags[new_id] = frozenset({v} | nv)
        tree_edges.append((host, new_id))
    return TreeDecomposition(bags=bags, edges=tuple(tree_edges), root=None, kinds=None)


def generate_bounded_width_instance(
    n: int, seed: int = 0, width: int = 3
) -> tuple[Instance, TreeDecomposition]:
    """Random singleton-reward instance whose reduced connection graph has
    treewidth at most ``width``, found by rejection sampling against the
    exact decomposer, returned together with a witness decomposition."""
    rng = random.Random(seed)
    if n < 1:
        raise InfeasibleConfigError("need at least one player")
    for _attempt in range(500):
        rewards = [
            ({v}, rng.randint(0, 100)) for v in range(1, n + 1) if rng.random() < 0.85
        ]
        penalties = []
        for _ in range(rng.randint(0, max(1, n // 2))):
            size = rng.randint(1, min(3, n))
            penalties.append((rng.sample(range(1, n + 1), size), rng.randint(1, 100)))
        inst = make_instance(n, rewards, penalties, ObjectiveMode.HIT_REWARD_COVER_PENALTY)
        graph = build_reduced_graph(inst)
        decomp = exact_decomposition(graph.nodes, graph.edges)
        if decomp.width <= width:
            return inst, decomp
    raise InfeasibleConfigError("could not sample a bounded-width instance")


# ---------------------------------------------------------------------------
# decomposition file format
# ---------------------------------------------------------------------------


def parse_pace_decomposition(text: str) -> TreeDecomposition:
    header: tuple[int, int, int] | None = None
    bags: dict[int, frozenset[int]] = {}
    tree_edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "s":
            if header is not None:
                raise FormatError(f"line {lineno}: duplicate header")
            if len(parts) != 5 or parts[1] != "td":
                raise FormatError(f"line {lineno}: expected 's td <bags> <max-bag-size> <nodes>'")
            try:
                header = (int(parts[2]), int(parts[3]), int(parts[4]))
            except ValueError:
                raise FormatError(f"line {lineno}: non-integer header counts") from None
        elif parts[0] == "b":
            if header is None:
                raise FormatError(f"line {lineno}: bag before header")
            try:
                bag_id = int(parts[1])
                members = [int(x) for x in parts[2:]]
            except (IndexError, ValueError):
                raise FormatError(f"line {lineno}: malformed bag line") from None
            if not (1 <= bag_id <= header[0]):
                raise FormatError(f"line {lineno}: bag id {bag_id} out of range")
            if bag_id in bags:
                raise FormatError(f"line {lineno}: duplicate bag {bag_id}")
            if any(not (1 <= v <= header[2]) for v in members):
                raise FormatError(f"line {lineno}: bag vertex out of range")
            if len(members) > header[1]:
                raise FormatError(f"line {lineno}: bag exceeds declared max size")
            bags[bag_id] = frozenset(members)
        else:
            if header is None:
                raise FormatError(f"line {lineno}: edge before header")
            if len(parts) != 2:
                raise FormatError(f"line {lineno}: expected a tree edge '<i> <j>'")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise FormatError(f"line {lineno}: non-integer tree edge") from None
            tree_edges.append((a, b))
    if header is None:
        raise FormatError("missing 's td' header")
    if len(bags) != header[0]:
        raise FormatError(f"declared {header[0]} bags, found {len(bags)}")
    if len(tree_edges) != max(header[0] - 1, 0):
        raise FormatError(
            f"declared {header[0]} bags, need {max(header[0] - 1, 0)} tree edges, found {len(tree_edges)}"
        )
    if any(a not in bags or b not in bags for a, b in tree_edges):
        raise FormatError("tree edge references an unknown bag")
    return TreeDecomposition(bags=bags, edges=tuple(tree_edges), root=None, kinds=None)


def format_pace_decomposition(decomp: TreeDecomposition, num_nodes: int | None = None) -> str:
    ids = sorted(decomp.bags)
    renum = {b: i + 1 for i, b in enumerate(ids)}
    if num_nodes is None:
        num_nodes = max((max(bag) for bag in decomp.bags.values() if bag), default=0)
    lines = [f"s td {len(ids)} {decomp.width + 1} {num_nodes}"]
    for b in ids:
        members = " ".join(str(v) for v in sorted(decomp.bags[b]))
        lines.append(f"b {renum[b]}{' ' + members if members else ''}")
    for a, b in decomp.edges:
        lines.append(f"{renum[a]} {renum[b]}")
    return "\n".join(lines) + "\n"
