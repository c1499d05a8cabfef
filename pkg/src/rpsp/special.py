"""Reductions and special-case solvers on the simplified connection graph.

Instances whose rewards are singletons and whose penalties are pairs are just
node/edge-weighted graphs. This module holds the translation in both
directions, an independent-set repair step, threshold solvers for uniform
weights, chordal-graph recognition, and the completion gadget that embeds
independent set into a chordal instance.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .core import (
    FormatError,
    Instance,
    ObjectiveMode,
    Selection,
    ValidationError,
    WeightedSet,
    evaluate,
)


@dataclass(frozen=True)
class SimpleGraph:
    """Undirected graph; optional node/edge weights live in parallel maps.

    Edges are stored as (u, v) tuples with u < v, deduplicated.
    """

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    node_weights: dict[int, float] | None = None
    edge_weights: dict[tuple[int, int], float] | None = None

    def __post_init__(self) -> None:
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise ValidationError("duplicate node ids")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValidationError(f"self-loop at node {u}")
            if not (u < v):
                raise ValidationError(f"edge ({u},{v}) not normalized")
            if u not in node_set or v not in node_set:
                raise ValidationError(f"edge ({u},{v}) leaves the node set")
            if (u, v) in seen:
                raise ValidationError(f"parallel edge ({u},{v})")
            seen.add((u, v))


def make_graph(
    nodes,
    edges,
    node_weights: dict[int, float] | None = None,
    edge_weights: dict[tuple[int, int], float] | None = None,
) -> SimpleGraph:
    """Normalize and validate raw node/edge collections into a SimpleGraph."""
    norm_edges = []
    seen = set()
    for u, v in edges:
        if u > v:
            u, v = v, u
        if (u, v) in seen:
            raise ValidationError(f"parallel edge ({u},{v})")
        seen.add((u, v))
        norm_edges.append((u, v))
    ew = None
    if edge_weights is not None:
        ew = {}
        for (u, v), w in edge_weights.items():
            if u > v:
                u, v = v, u
            ew[(u, v)] = float(w)
    return SimpleGraph(
        nodes=tuple(sorted(nodes)),
        edges=tuple(sorted(norm_edges)),
        node_weights=dict(node_weights) if node_weights is not None else None,
        edge_weights=ew,
    )


def neighbors(graph: SimpleGraph) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {v: set() for v in graph.nodes}
    for u, v in graph.edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def max_degree(graph: SimpleGraph) -> int:
    adj = neighbors(graph)
    return max((len(s) for s in adj.values()), default=0)


# ---------------------------------------------------------------------------
# reductions between graphs and instances
# ---------------------------------------------------------------------------


def mis_to_rpsp(graph: SimpleGraph) -> Instance:
    """Embed maximum independent set: unit reward per node, unit penalty per
    edge, hit-reward mode. The optimum equals the MIS size.

    Players are numbered 1..n following the sorted node order.
    """
    index = {v: i + 1 for i, v in enumerate(sorted(graph.nodes))}
    rewards = tuple(WeightedSet(frozenset({index[v]}), 1.0) for v in sorted(graph.nodes))
    penalties = tuple(
        WeightedSet(frozenset({index[u], index[v]}), 1.0) for u, v in graph.edges
    )
    return Instance(
        n=len(graph.nodes),
        reward_sets=rewards,
        penalty_sets=penalties,
        mode=ObjectiveMode.HIT_REWARD_COVER_PENALTY,
    )


def repair(instance: Instance, members) -> Selection:
    """Shrink a selection until no penalty set is completely chosen.

    Intended for unit-weight instances with size-2 penalties (the independent
    set reduction), where dropping one endpoint per covered pair never lowers
    the value. Each round removes the chosen player sitting in the most
    fully-chosen penalty sets, smallest id on ties.
    """
    chosen = set(members)
    bad = [ws for ws in instance.penalty_sets if ws.members <= chosen]
    while bad:
        counts: dict[int, int] = {}
        for ws in bad:
            for m in ws.members:
                counts[m] = counts.get(m, 0) + 1
        victim = min(counts, key=lambda m: (-counts[m], m))
        chosen.discard(victim)
        bad = [ws for ws in instance.penalty_sets if ws.members <= chosen]
    return Selection(members=frozenset(chosen), value=evaluate(instance, chosen))


def simplify_connection_graph(instance: Instance) -> SimpleGraph:
    """Collapse singleton rewards and pair penalties into a weighted graph.

    Parallel pair penalties merge into one edge with summed weight. Any other
    shape (multi-member reward, penalty of size != 2) is rejected.
    """
    node_w = {v: 0.0 for v in range(1, instance.n + 1)}
    for ws in instance.reward_sets:
        if len(ws.members) != 1:
            raise ValidationError("reward sets must be singletons to simplify")
        (v,) = ws.members
        node_w[v] += ws.weight
    edge_w: dict[tuple[int, int], float] = {}
    for ws in instance.penalty_sets:
        if len(ws.members) != 2:
            raise ValidationError("penalty sets must be pairs to simplify")
        u, v = sorted(ws.members)
        edge_w[(u, v)] = edge_w.get((u, v), 0.0) + ws.weight
    return make_graph(
        nodes=range(1, instance.n + 1),
        edges=edge_w.keys(),
        node_weights=node_w,
        edge_weights=edge_w,
    )


def _graph_to_instance(graph: SimpleGraph) -> Instance:
    index = {v: i + 1 for i, v in enumerate(sorted(graph.nodes))}
    nw = graph.node_weights or {}
    ew = graph.edge_weights or {}
    rewards = tuple(
        WeightedSet(frozenset({index[v]}), float(nw.get(v, 1.0)))
        for v in sorted(graph.nodes)
    )
    penalties = tuple(
        WeightedSet(frozenset({index[u], index[v]}), float(ew.get((u, v), 1.0)))
        for u, v in graph.edges
    )
    return Instance(
        n=len(graph.nodes),
        reward_sets=rewards,
        penalty_sets=penalties,
        mode=ObjectiveMode.HIT_REWARD_COVER_PENALTY,
    )


# ---------------------------------------------------------------------------
# chordality
# ---------------------------------------------------------------------------


def is_chordal(graph: SimpleGraph) -> tuple[bool, tuple[int, ...] | None]:
    """Chordality test; on success also returns a perfect elimination ordering.

    Lexicographic BFS visits the nodes; the reversed visit order is a perfect
    elimination ordering exactly when the graph is chordal, which the second
    pass checks by definition.
    """
    adj = neighbors(graph)
    unvisited = set(graph.nodes)
    labels: dict[int, list[int]] = {v: [] for v in graph.nodes}
    visit_order: list[int] = []
    step = len(graph.nodes)
    while unvisited:
        v = max(unvisited, key=lambda u: (labels[u], -u))
        unvisited.discard(v)
        visit_order.append(v)
        for u in adj[v]:
            if u in unvisited:
                labels[u].append(step)
        step -= 1
    elimination = tuple(reversed(visit_order))
    pos = {v: i for i, v in enumerate(elimination)}
    for v in elimination:
        later = [u for u in adj[v] if pos[u] > pos[v]]
        if not later:
            continue
        w = min(later, key=lambda u: pos[u])
        if any(u != w and u not in adj[w] for u in later):
            return False, None
    return True, elimination


def _chordal_mis(graph: SimpleGraph, elimination: tuple[int, ...]) -> frozenset[int]:
    # Greedy over a perfect elimination ordering is exact for independent set.
    adj = neighbors(graph)
    taken: set[int] = set()
    for v in elimination:
        if not (adj[v] & taken):
            taken.add(v)
    return frozenset(taken)


# ---------------------------------------------------------------------------
# uniform-weight threshold cases
# ---------------------------------------------------------------------------


def solve_uniform(graph: SimpleGraph, a: float, b: float) -> Selection | None:
    """Solve the uniform-weight graph case when a threshold applies.

    With reward a per node and penalty b per edge: if b/a is at most 1/max
    degree, taking every node is optimal; if b/a is at least 1 and the graph
    is chordal, a maximum independent set is optimal. Anything else returns
    None so the caller can fall back to an exact general solver.
    """
    if a <= 0 or b < 0:
        raise ValidationError("uniform weights need a > 0 and b >= 0")
    delta = max_degree(graph)
    if delta == 0 or b * delta <= a * (1 + 1e-12):
        members = frozenset(graph.nodes)
        return Selection(members=members, value=a * len(graph.nodes) - b * len(graph.edges))
    if b >= a:
        ok, elimination = is_chordal(graph)
        if not ok:
            return None
        mis = _chordal_mis(graph, elimination)
        return Selection(members=mis, value=a * len(mis))
    return None


# ---------------------------------------------------------------------------
# chordal hardness gadget
# ---------------------------------------------------------------------------


def chordal_gadget(graph: SimpleGraph) -> tuple[SimpleGraph, Instance]:
    """Complete the graph: original edges get penalty |V|+1, the filled-in
    edges penalty 0, every node reward 1. The completed graph is chordal and
    the instance optimum equals the source graph's MIS size."""
    nodes = sorted(graph.nodes)
    heavy = float(len(nodes) + 1)
    original = set(graph.edges)
    all_edges = [(u, v) for i, u in enumerate(nodes) for v in nodes[i + 1 :]]
    edge_w = {e: (heavy if e in original else 0.0) for e in all_edges}
    gadget = make_graph(
        nodes=nodes,
        edges=all_edges,
        node_weights={v: 1.0 for v in nodes},
        edge_weights=edge_w,
    )
    return gadget, _graph_to_instance(gadget)


# ---------------------------------------------------------------------------
# PACE-style text format ("p tw" header, "e u v" lines)
# ---------------------------------------------------------------------------


def parse_pace_graph(text: str) -> SimpleGraph:
    """Parse a graph in the DIMACS-like format: comment lines start with
    "c", one "p tw <#nodes> <#edges>" header, then "e <u> <v>" lines with
    1-based endpoints."""
    declared: tuple[int, int] | None = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if declared is not None:
                raise FormatError(f"line {lineno}: duplicate header")
            if len(parts) != 4 or parts[1] != "tw":
                raise FormatError(f"line {lineno}: expected 'p tw <nodes> <edges>'")
            try:
                declared = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise FormatError(f"line {lineno}: non-integer header counts") from None
        elif parts[0] == "e":
            if declared is None:
                raise FormatError(f"line {lineno}: edge before header")
            if len(parts) != 3:
                raise FormatError(f"line {lineno}: expected 'e <u> <v>'")
            try:
                u, v = int(parts[1]), int(parts[2])
            except ValueError:
                raise FormatError(f"line {lineno}: non-integer endpoints") from None
            if not (1 <= u <= declared[0] and 1 <= v <= declared[0]):
                raise FormatError(f"line {lineno}: endpoint out of range")
            edges.append((u, v))
        else:
            raise FormatError(f"line {lineno}: unknown line type {parts[0]!r}")
    if declared is None:
        raise FormatError("missing 'p tw' header")
    if len(edges) != declared[1]:
        raise FormatError(f"declared {declared[1]} edges, found {len(edges)}")
    try:
        return make_graph(nodes=range(1, declared[0] + 1), edges=edges)
    except ValidationError as exc:
        raise FormatError(str(exc)) from None


def format_pace_graph(graph: SimpleGraph) -> str:
    index = {v: i + 1 for i, v in enumerate(sorted(graph.nodes))}
    lines = [f"p tw {len(graph.nodes)} {len(graph.edges)}"]
    for u, v in graph.edges:
        lines.append(f"e {index[u]} {index[v]}")
    return "\n".join(lines) + "\n"


def random_graph(n: int, p: float, seed: int) -> SimpleGraph:
    """Erdos-Renyi style helper used by benchmarks and tests."""
    rng = random.Random(seed)
    edges = [
        (u, v)
        for u in range(1, n + 1)
        for v in range(u + 1, n + 1)
        if rng.random() < p
    ]
    return make_graph(nodes=range(1, n + 1), edges=edges)
