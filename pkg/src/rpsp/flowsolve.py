"""Exact solver for the cover-reward objective via max-flow / min-cut.

The instance is turned into a bipartite flow network: the source feeds every
penalty set, every reward set feeds the sink, and a huge-capacity arc ties each
penalty to every reward set it intersects. The optimum equals the total reward
weight minus the min-cut capacity, and the reward sets left on the sink side of
the cut spell out an optimal selection. A decision variant bolts a threshold
arc onto the same network so a single flow computation answers "is the optimum
at least alpha".
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .core import (
    VALUE_TOL,
    Instance,
    ObjectiveMode,
    Selection,
    ValidationError,
    evaluate,
    validate,
)

_EPS = 1e-12


@dataclass(frozen=True)
class FlowNetwork:
    """Directed capacitated network with designated source and sink.

    ``big`` is the finite stand-in for infinite capacity; it strictly exceeds
    the sum of all finite capacities so no minimum cut ever severs such an arc.
    """

    num_nodes: int
    source: int
    sink: int
    arcs: tuple[tuple[int, int, float], ...]
    big: float
    reward_nodes: tuple[int, ...]
    penalty_nodes: tuple[int, ...]
    labels: tuple[str, ...]
    gadget_node: int | None = None


@dataclass(frozen=True)
class Cut:
    source_side: frozenset[int]
    sink_side: frozenset[int]
    capacity: float


class _Dinic:
    def __init__(self, n: int) -> None:
        self.n = n
        self.heads: list[int] = []
        self.caps: list[float] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add_arc(self, tail: int, head: int, cap: float) -> None:
        self.adj[tail].append(len(self.heads))
        self.heads.append(head)
        self.caps.append(float(cap))
        self.adj[head].append(len(self.heads))
        self.heads.append(tail)
        self.caps.append(0.0)

    def _bfs(self, s: int, t: int) -> bool:
        self.level = [-1] * self.n
        self.level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for idx in self.adj[u]:
                v = self.heads[idx]
                if self.caps[idx] > _EPS and self.level[v] < 0:
                    self.level[v] = self.level[u] + 1
                    queue.append(v)
        return self.level[t] >= 0

    def _dfs(self, u: int, t: int, pushed: float) -> float:
        if u == t:
            return pushed
        while self.iters[u] < len(self.adj[u]):
            idx = self.adj[u][self.iters[u]]
            v = self.heads[idx]
            if self.caps[idx] > _EPS and self.level[v] == self.level[u] + 1:
                got = self._dfs(v, t, min(pushed, self.caps[idx]))
                if got > _EPS:
                    self.caps[idx] -= got
                    self.caps[idx ^ 1] += got
                    return got
            self.iters[u] += 1
        return 0.0

    def run(self, s: int, t: int) -> float:
        flow = 0.0
        while self._bfs(s, t):
            self.iters = [0] * self.n
            while True:
                pushed = self._dfs(s, t, math.inf)
                if pushed <= _EPS:
                    break
                flow += pushed
        return flow

    def reachable(self, s: int) -> frozenset[int]:
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for idx in self.adj[u]:
                v = self.heads[idx]
                if self.caps[idx] > _EPS and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return frozenset(seen)


def build_rps_graph(instance: Instance, alpha: float | None = None) -> FlowNetwork:
    """Build the bipartite reward/penalty network, optionally with the
    decision gadget arc of capacity ``alpha``."""
    if instance.mode is not ObjectiveMode.COVER_REWARD_HIT_PENALTY:
        raise ValidationError("flow solver handles the cover-reward objective only")
    issues = validate(instance)
    if issues:
        raise ValidationError("; ".join(issues))
    if alpha is not None and alpha < 0:
        raise ValidationError("gadget threshold must be nonnegative")

    rewards = instance.reward_sets
    penalties = instance.penalty_sets
    big = (
        sum(ws.weight for ws in rewards)
        + sum(ws.weight for ws in penalties)
        + (abs(alpha) if alpha is not None else 0.0)
        + 1.0
    )

    source, sink = 0, 1
    labels = ["s", "t"]
    penalty_nodes = tuple(range(2, 2 + len(penalties)))
    labels += [f"P{j + 1}" for j in range(len(penalties))]
    reward_nodes = tuple(range(2 + len(penalties), 2 + len(penalties) + len(rewards)))
    labels += [f"R{i + 1}" for i in range(len(rewards))]

    arcs: list[tuple[int, int, float]] = []
    for j, ws in enumerate(penalties):
        arcs.append((source, penalty_nodes[j], float(ws.weight)))
    for j, pen in enumerate(penalties):
        for i, rew in enumerate(rewards):
            if pen.members & rew.members:
                arcs.append((penalty_nodes[j], reward_nodes[i], big))
    for i, ws in enumerate(rewards):
        arcs.append((reward_nodes[i], sink, float(ws.weight)))

    gadget_node = None
    if alpha is not None:
        gadget_node = 2 + len(penalties) + len(rewards)
        labels.append("aux")
        arcs.append((source, gadget_node, float(alpha)))
        arcs.append((gadget_node, sink, big))

    return FlowNetwork(
        num_nodes=len(labels),
        source=source,
        sink=sink,
        arcs=tuple(arcs),
        big=big,
        reward_nodes=reward_nodes,
        penalty_nodes=penalty_nodes,
        labels=tuple(labels),
        gadget_node=gadget_node,
    )


def max_flow(network: FlowNetwork) -> tuple[float, Cut]:
    """Maximum flow value plus a matching minimum cut.

    The pair doubles as a certificate: the flow value and the cut capacity are
    checked against each other before returning.
    """
    solver = _Dinic(network.num_nodes)
    for tail, head, cap in network.arcs:
        solver.add_arc(tail, head, cap)
    flow = solver.run(network.source, network.sink)
    source_side = solver.reachable(network.source)
    sink_side = frozenset(range(network.num_nodes)) - source_side

    capacity = 0.0
    for tail, head, cap in network.arcs:
        if tail in source_side and head in sink_side:
            assert cap < network.big, "minimum cut severed a BIG arc"
            capacity += cap
    assert abs(flow - capacity) <= VALUE_TOL * max(1.0, abs(capacity)), (
        "flow/cut certificate mismatch"
    )
    return flow, Cut(source_side=source_side, sink_side=sink_side, capacity=capacity)


def solve_max(instance: Instance) -> Selection:
    """Optimal selection for a cover-reward instance via one min cut."""
    network = build_rps_graph(instance)
    _flow, cut = max_flow(network)
    total_reward = sum(ws.weight for ws in instance.reward_sets)
    members = frozenset(
        m
        for i, node in enumerate(network.reward_nodes)
        if node in cut.sink_side
        for m in instance.reward_sets[i].members
    )
    value = evaluate(instance, members)
    assert abs(value - (total_reward - cut.capacity)) <= VALUE_TOL * max(1.0, abs(value))
    return Selection(members=members, value=value)


def decide_max(instance: Instance, alpha: float) -> bool:
    """Does some selection score at least ``alpha``?

    Every finite cut of the gadget network pays the threshold arc, so the
    answer is yes exactly when the gadget's min cut stays within the total
    reward weight.
    """
    if instance.mode is not ObjectiveMode.COVER_REWARD_HIT_PENALTY:
        raise ValidationError("flow solver handles the cover-reward objective only")
    if alpha <= 0:
        return True  # the empty selection already scores 0
    network = build_rps_graph(instance, alpha=alpha)
    flow, _cut = max_flow(network)
    total_reward = sum(ws.weight for ws in instance.reward_sets)
    return flow <= total_reward + VALUE_TOL


def to_dot(network: FlowNetwork) -> str:
    """Debug dump of the network in DOT text format."""
    lines = ["digraph flow {"]
    for i, label in enumerate(network.labels):
        lines.append(f'  n{i} [label="{label}"];')
    for tail, head, cap in network.arcs:
        text = "BIG" if cap >= network.big else f"{cap:g}"
        lines.append(f'  n{tail} -> n{head} [label="cap={text}"];')
    lines.append("}")
    return "\n".join(lines)
