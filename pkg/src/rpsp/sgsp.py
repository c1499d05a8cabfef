"""Subgraph selection on graphs: reward subgraphs pay when the induced
selection touches them, penalty subgraphs cost when fully induced.

A selection S of host nodes induces the subgraph G|_S (all host edges inside
S). A reward subgraph counts as soon as it shares a node with G|_S; a penalty
subgraph counts only when all of its nodes and edges are present. On tree
hosts with single-node rewards and connected penalties, the per-penalty IP
constraints give a constraint graph whose tree decomposition can be read off
the host: one bag per host node holding its variable and the constraints of
the penalties through it, plus one leaf bag per penalty. The width of that
decomposition is bounded by the maximum number of penalties through any
single node.

SGSP instances serialize to JSON with top-level keys "n", "host_edges",
"reward_subgraphs" and "penalty_subgraphs"; each subgraph is an object with
"nodes", "edges" and "weight". Host nodes are 1..n. Decompositions use the
same td text format as the tree DP module.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .core import (
    FormatError,
    InvalidSelectionError,
    SizeLimitError,
    ValidationError,
)
from .special import SimpleGraph, make_graph
from .treedp import TreeDecomposition, check_decomposition

BRUTE_FORCE_NODE_CAP = 22


# ---------------------------------------------------------------------------
# instance model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedSubgraph:
    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]
    weight: float


@dataclass(frozen=True)
class SGSPInstance:
    host: SimpleGraph
    rewards: tuple[WeightedSubgraph, ...]
    penalties: tuple[WeightedSubgraph, ...]


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    if u == v:
        raise ValidationError(f"self-loop ({u},{v}) is not a subgraph edge")
    return (u, v) if u < v else (v, u)


def make_sgsp(host: SimpleGraph, rewards, penalties) -> SGSPInstance:
    """Build and validate an instance from (nodes, edges, weight) triples."""

    host_nodes = set(host.nodes)

    def build(triples, label: str) -> tuple[WeightedSubgraph, ...]:
        out = []
        for idx, (nodes, edges, weight) in enumerate(triples):
            sub = WeightedSubgraph(
                nodes=frozenset(nodes),
                edges=frozenset(_norm_edge(u, v) for u, v in edges),
                weight=float(weight),
            )
            if not sub.nodes:
                raise ValidationError(f"{label}[{idx}] has no nodes")
            if sub.weight < 0:
                raise ValidationError(f"{label}[{idx}] has negative weight")
            if not sub.nodes <= host_nodes:
                raise ValidationError(f"{label}[{idx}] uses nodes outside the host")
            for u, v in sub.edges:
                if (u, v) not in host.edges:
                    raise ValidationError(f"{label}[{idx}] edge ({u},{v}) is not a host edge")
                if u not in sub.nodes or v not in sub.nodes:
                    raise ValidationError(f"{label}[{idx}] edge ({u},{v}) leaves its node set")
            out.append(sub)
        return tuple(out)

    return SGSPInstance(
        host=host,
        rewards=build(rewards, "rewards"),
        penalties=build(penalties, "penalties"),
    )


def evaluate_sgsp(instance: SGSPInstance, members) -> float:
    """Rewards count on node intersection with the induced subgraph,
    penalties only when nodes and edges are entirely induced."""
    chosen = frozenset(members)
    host_nodes = set(instance.host.nodes)
    if not chosen <= host_nodes:
        raise InvalidSelectionError(
            f"selection uses nodes outside the host: {sorted(chosen - host_nodes)}"
        )
    induced_edges = {e for e in instance.host.edges if e[0] in chosen and e[1] in chosen}
    total = sum(r.weight for r in instance.rewards if r.nodes & chosen)
    total -= sum(
        p.weight
        for p in instance.penalties
        if p.nodes <= chosen and p.edges <= induced_edges
    )
    return total


def brute_force_sgsp(instance: SGSPInstance) -> tuple[float, frozenset[int]]:
    """Exact optimum with lexicographically smallest witness."""
    order = sorted(instance.host.nodes)
    if len(order) > BRUTE_FORCE_NODE_CAP:
        raise SizeLimitError(
            f"{len(order)} host nodes exceed the brute-force cap {BRUTE_FORCE_NODE_CAP}"
        )
    best_value = 0.0
    best_members = frozenset()
    best_key = ()
    for bits in range(1 << len(order)):
        members = frozenset(v for i, v in enumerate(order) if bits >> i & 1)
        value = evaluate_sgsp(instance, members)
        key = tuple(sorted(members))
        if value > best_value or (value == best_value and key < best_key):
            best_value, best_members, best_key = value, members, key
    return best_value, best_members


# ---------------------------------------------------------------------------
# star gadget
# ---------------------------------------------------------------------------


def star_reduction(graph: SimpleGraph) -> SGSPInstance:
    """Embed an independent-set problem: star host with a fresh center c,
    unit rewards on the original nodes, a dominating reward on c, and for
    each original edge a penalty path through c too expensive to complete.
    The optimum is (|V|+1) + MIS(graph)."""
    center = max(graph.nodes, default=0) + 1
    host = make_graph(
        set(graph.nodes) | {center}, [(v, center) for v in sorted(graph.nodes)]
    )
    big_reward = len(graph.nodes) + 1
    rewards = [({v}, (), 1.0) for v in sorted(graph.nodes)]
    rewards.append(({center}, (), float(big_reward)))
    deterrent = len(host.nodes) + 1
    penalties = [
        ({u, center, v}, [(u, center), (center, v)], float(deterrent))
        for u, v in sorted(graph.edges)
    ]
    return make_sgsp(host, rewards, penalties)


# ---------------------------------------------------------------------------
# frequency and the IP graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyProfile:
    per_node: dict[int, int]
    maximum: int


def frequency_profile(instance: SGSPInstance) -> FrequencyProfile:
    per_node = {
        v: sum(1 for p in instance.penalties if v in p.nodes)
        for v in instance.host.nodes
    }
    return FrequencyProfile(per_node=per_node, maximum=max(per_node.values(), default=0))


@dataclass(frozen=True)
class ConstraintGraph:
    """Bipartite: variables (one x per host node, one z per penalty) against
    one constraint node per penalty; a constraint touches the x of each
    penalty node and its own z."""

    variables: tuple[str, ...]
    constraints: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def degree(self, name: str) -> int:
        return sum(1 for e in self.edges if name in e)


def _require_restricted(instance: SGSPInstance) -> None:
    for idx, r in enumerate(instance.rewards):
        if len(r.nodes) != 1 or r.edges:
            raise ValidationError(f"rewards[{idx}] must be a single node here")


def build_constraint_graph(instance: SGSPInstance) -> ConstraintGraph:
    _require_restricted(instance)
    variables = [f"x{v}" for v in sorted(instance.host.nodes)]
    variables += [f"z{k}" for k in range(1, len(instance.penalties) + 1)]
    constraints = [f"C{k}" for k in range(1, len(instance.penalties) + 1)]
    edges: list[tuple[str, str]] = []
    for k, p in enumerate(instance.penalties, start=1):
        edges.extend((f"x{v}", f"C{k}") for v in sorted(p.nodes))
        edges.append((f"z{k}", f"C{k}"))
    return ConstraintGraph(
        variables=tuple(variables), constraints=tuple(constraints), edges=tuple(edges)
    )


def build_interaction_graph(bp: ConstraintGraph) -> SimpleGraph:
    """Variables only; two variables are adjacent when some constraint uses
    both, so each constraint contributes a clique. Node i of the result is
    bp.variables[i-1]."""
    index = {name: i for i, name in enumerate(bp.variables, start=1)}
    touching: dict[str, list[str]] = {c: [] for c in bp.constraints}
    for var, con in bp.edges:
        touching[con].append(var)
    edges = set()
    for group in touching.values():
        ids = sorted(index[v] for v in group)
        edges.update((a, b) for i, a in enumerate(ids) for b in ids[i + 1 :])
    return make_graph(range(1, len(bp.variables) + 1), sorted(edges))


# ---------------------------------------------------------------------------
# decomposition of the constraint graph along a tree host
# ---------------------------------------------------------------------------


def constraint_graph_as_ints(bp: ConstraintGraph):
    """Integer view (nodes, edges, name->id) shared with the td tooling;
    variables come first, then constraint nodes."""
    names = bp.variables + bp.constraints
    ids = {name: i for i, name in enumerate(names, start=1)}
    nodes = tuple(ids[name] for name in names)
    edges = tuple((ids[a], ids[b]) for a, b in bp.edges)
    return nodes, edges, ids


def _host_is_tree(host: SimpleGraph) -> bool:
    if not host.nodes:
        return False
    if len(host.edges) != len(host.nodes) - 1:
        return False
    adj: dict[int, list[int]] = {v: [] for v in host.nodes}
    for u, v in host.edges:
        adj[u].append(v)
        adj[v].append(u)
    start = host.nodes[0]
    seen = {start}
    queue = [start]
    while queue:
        cur = queue.pop()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen == set(host.nodes)


def _penalty_connected(p: WeightedSubgraph) -> bool:
    if len(p.nodes) == 1:
        return True
    adj: dict[int, list[int]] = {v: [] for v in p.nodes}
    for u, v in p.edges:
        adj[u].append(v)
        adj[v].append(u)
    start = next(iter(p.nodes))
    seen = {start}
    queue = [start]
    while queue:
        cur = queue.pop()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen == p.nodes


def lemma_decomposition(instance: SGSPInstance) -> TreeDecomposition:
    """Tree decomposition of the constraint graph with width at most the
    maximum penalty frequency.

    The bag of host node v holds x_v plus the constraints of all penalties
    through v; each penalty also gets a leaf bag {C, z} attached at its
    smallest-index node. Bag ids reuse host node ids; leaf bags follow.
    """
    if not _host_is_tree(instance.host):
        raise ValidationError("host graph must be a tree")
    _require_restricted(instance)
    for idx, p in enumerate(instance.penalties):
        if not _penalty_connected(p):
            raise ValidationError(
                f"penalties[{idx}] is disconnected; the per-node bag construction needs connected penalties"
            )
    bp = build_constraint_graph(instance)
    nodes, edges, ids = constraint_graph_as_ints(bp)
    bags: dict[int, frozenset[int]] = {}
    for v in sorted(instance.host.nodes):
        content = {ids[f"x{v}"]}
        content.update(
            ids[f"C{k}"] for k, p in enumerate(instance.penalties, start=1) if v in p.nodes
        )
        bags[v] = frozenset(content)
    tree_edges = list(instance.host.edges)
    next_id = max(instance.host.nodes) + 1
    for k, p in enumerate(instance.penalties, start=1):
        bags[next_id] = frozenset({ids[f"C{k}"], ids[f"z{k}"]})
        tree_edges.append((min(p.nodes), next_id))
        next_id += 1
    decomp = TreeDecomposition(bags=bags, edges=tuple(tree_edges))
    issues = check_decomposition(decomp, nodes, edges)
    assert not issues, issues
    assert decomp.width <= frequency_profile(instance).maximum
    return decomp


# ---------------------------------------------------------------------------
# random tree instances (test support)
# ---------------------------------------------------------------------------


def random_tree_instance(
    n: int, seed: int = 0, max_frequency: int = 4
) -> SGSPInstance:
    """Random tree host, unit-node rewards, random connected penalty
    subtrees; no node ends up in more than max_frequency penalties."""
    if n < 1:
        raise ValidationError("need at least one host node")
    rng = random.Random(seed)
    host_edges = [
        tuple(sorted((rng.randint(1, v - 1), v))) for v in range(2, n + 1)
    ]
    host = make_graph(range(1, n + 1), host_edges)
    adj: dict[int, list[int]] = {v: [] for v in host.nodes}
    for u, v in host.edges:
        adj[u].append(v)
        adj[v].append(u)
    rewards = [({v}, (), float(rng.randint(1, 100))) for v in range(1, n + 1)]
    used = {v: 0 for v in host.nodes}
    penalties = []
    for _ in range(rng.randint(0, n)):
        open_nodes = [v for v in sorted(host.nodes) if used[v] < max_frequency]
        if not open_nodes:
            break
        start = rng.choice(open_nodes)
        target = rng.randint(1, min(4, n))
        chosen = {start}
        sub_edges: list[tuple[int, int]] = []
        frontier = [
            (u, v)
            for u in chosen
            for v in adj[u]
            if v not in chosen and used[v] < max_frequency
        ]
        while frontier and len(chosen) < target:
            u, v = frontier.pop(rng.randrange(len(frontier)))
            if v in chosen:
                continue
            chosen.add(v)
            sub_edges.append(tuple(sorted((u, v))))
            frontier.extend(
                (v, w) for w in adj[v] if w not in chosen and used[w] < max_frequency
            )
        for v in chosen:
            used[v] += 1
        penalties.append((chosen, sub_edges, float(rng.randint(1, 100))))
    return make_sgsp(host, rewards, penalties)


# ---------------------------------------------------------------------------
# JSON form
# ---------------------------------------------------------------------------


def _parse_subgraph(obj: object, where: str) -> tuple[list[int], list[tuple[int, int]], float]:
    if not isinstance(obj, dict):
        raise FormatError(f"{where} must be an object")
    unknown = set(obj) - {"nodes", "edges", "weight"}
    if unknown:
        raise FormatError(f"{where}: unknown keys {sorted(unknown)}")
    nodes = obj.get("nodes")
    edges = obj.get("edges", [])
    weight = obj.get("weight")
    if not isinstance(nodes, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in nodes
    ):
        raise FormatError(f"{where}: 'nodes' must be an integer array")
    if not isinstance(edges, list) or not all(
        isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)
        for e in edges
    ):
        raise FormatError(f"{where}: 'edges' must be an array of pairs")
    if not isinstance(weight, (int, float)) or isinstance(weight, bool) or weight < 0:
        raise FormatError(f"{where}: 'weight' must be a nonnegative number")
    return nodes, [tuple(e) for e in edges], float(weight)


def sgsp_from_dict(data: object) -> SGSPInstance:
    if not isinstance(data, dict):
        raise FormatError("instance must be a JSON object")
    unknown = set(data) - {"n", "host_edges", "reward_subgraphs", "penalty_subgraphs"}
    if unknown:
        raise FormatError(f"unknown instance keys {sorted(unknown)}")
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise FormatError("'n' must be a nonnegative integer")
    host_edges = data.get("host_edges", [])
    if not isinstance(host_edges, list) or not all(
        isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)
        for e in host_edges
    ):
        raise FormatError("'host_edges' must be an array of pairs")
    rewards = data.get("reward_subgraphs", [])
    penalties = data.get("penalty_subgraphs", [])
    if not isinstance(rewards, list) or not isinstance(penalties, list):
        raise FormatError("'reward_subgraphs' and 'penalty_subgraphs' must be arrays")
    try:
        host = make_graph(range(1, n + 1), [tuple(e) for e in host_edges])
        return make_sgsp(
            host,
            [_parse_subgraph(o, f"reward_subgraphs[{i}]") for i, o in enumerate(rewards)],
            [_parse_subgraph(o, f"penalty_subgraphs[{i}]") for i, o in enumerate(penalties)],
        )
    except ValidationError as exc:
        raise FormatError(str(exc)) from exc


def sgsp_to_dict(instance: SGSPInstance) -> dict:
    if instance.host.nodes != tuple(range(1, len(instance.host.nodes) + 1)):
        raise FormatError("JSON form requires host nodes 1..n")

    def sub(s: WeightedSubgraph) -> dict:
        return {
            "nodes": sorted(s.nodes),
            "edges": [list(e) for e in sorted(s.edges)],
            "weight": s.weight,
        }

    return {
        "n": len(instance.host.nodes),
        "host_edges": [list(e) for e in sorted(instance.host.edges)],
        "reward_subgraphs": [sub(s) for s in instance.rewards],
        "penalty_subgraphs": [sub(s) for s in instance.penalties],
    }


def load_sgsp(path: str) -> SGSPInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    return sgsp_from_dict(data)


def dump_sgsp(instance: SGSPInstance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sgsp_to_dict(instance), fh, indent=2, sort_keys=True)
        fh.write("\n")
