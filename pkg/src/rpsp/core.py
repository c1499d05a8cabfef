"""Instance model, evaluation, random generation and the brute-force oracle.

An instance consists of players 1..n, weighted reward sets, weighted penalty
sets and an objective mode.  The two modes are the two directions in which a
set can score:

* ``COVER_REWARD_HIT_PENALTY``: a reward set pays out when fully chosen,
  a penalty set costs as soon as one member is chosen.
* ``HIT_REWARD_COVER_PENALTY``: a reward set pays out as soon as one member
  is chosen, a penalty set costs only when fully chosen.

Values are compared with absolute tolerance ``VALUE_TOL`` throughout the
package; the generator emits integer weights so oracle comparisons stay exact.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

VALUE_TOL = 1e-9

#: brute_force refuses instances above this player count unless overridden.
BRUTE_FORCE_CAP = 24

_CHUNK_BITS = 20  # enumerate selections in chunks of 2^20 bitmasks


class RpspError(Exception):
    """Base class for all package errors."""


class ValidationError(RpspError):
    """An instance or selection violates a structural invariant."""


class InvalidSelectionError(RpspError):
    """A selection references players outside 1..n."""


class SizeLimitError(RpspError):
    """The exponential oracle was asked to enumerate too many selections."""


class InfeasibleConfigError(RpspError):
    """A generator configuration cannot produce a valid instance."""


class FormatError(RpspError):
    """Malformed instance text (unknown keys, wrong types, bad values)."""


class ObjectiveMode(Enum):
    COVER_REWARD_HIT_PENALTY = "cover-reward"
    HIT_REWARD_COVER_PENALTY = "hit-reward"


@dataclass(frozen=True)
class WeightedSet:
    """A member set with its nonnegative weight."""

    members: frozenset[int]
    weight: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", frozenset(self.members))
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True)
class Instance:
    """Players 1..n plus weighted reward and penalty sets.

    Attributes
    ----------
    n : int
        Number of players; players are the integers 1..n.
    reward_sets, penalty_sets : tuple[WeightedSet, ...]
        The weighted set families.
    mode : ObjectiveMode
        Which family scores on cover and which on hit.
    """

    n: int
    reward_sets: tuple[WeightedSet, ...]
    penalty_sets: tuple[WeightedSet, ...]
    mode: ObjectiveMode

    def __post_init__(self) -> None:
        object.__setattr__(self, "reward_sets", tuple(self.reward_sets))
        object.__setattr__(self, "penalty_sets", tuple(self.penalty_sets))


@dataclass(frozen=True)
class Selection:
    """A chosen player subset together with its evaluated profit."""

    members: frozenset[int]
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", frozenset(self.members))


@dataclass(frozen=True)
class InstanceConfig:
    """Random-instance configuration (n, r, p, beta) plus a seed."""

    n: int
    r: int
    p: int
    beta: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 0 or self.r < 0 or self.p < 0:
            raise ValidationError("n, r, p must be nonnegative")
        if not (0 < self.beta <= 1):
            raise ValidationError(f"beta must be in (0, 1], got {self.beta}")


def make_instance(
    n: int,
    rewards: Iterable[tuple[Iterable[int], float]] = (),
    penalties: Iterable[tuple[Iterable[int], float]] = (),
    mode: ObjectiveMode = ObjectiveMode.HIT_REWARD_COVER_PENALTY,
) -> Instance:
    """Convenience constructor from (members, weight) pairs."""
    return Instance(
        n=n,
        reward_sets=tuple(WeightedSet(frozenset(m), w) for m, w in rewards),
        penalty_sets=tuple(WeightedSet(frozenset(m), w) for m, w in penalties),
        mode=mode,
    )


def validate(instance: Instance) -> list[str]:
    """Return a list of human-readable invariant violations (empty if none)."""
    violations: list[str] = []
    if instance.n < 0:
        violations.append(f"player count {instance.n} is negative")
    for label, family in (("reward", instance.reward_sets), ("penalty", instance.penalty_sets)):
        for idx, ws in enumerate(family):
            if not ws.members:
                violations.append(f"{label} set {idx} is empty")
            for member in ws.members:
                if not (1 <= member <= instance.n):
                    violations.append(
                        f"{label} set {idx}: member {member} out of range 1..{instance.n}"
                    )
            if not math.isfinite(ws.weight) or ws.weight < 0:
                violations.append(f"{label} set {idx}: weight {ws.weight} not a nonnegative real")
    return violations


def evaluate(instance: Instance, members: Iterable[int]) -> float:
    """Profit of the selection ``members`` under the instance's mode.

    Raises InvalidSelectionError if a member lies outside 1..n.
    """
    chosen = frozenset(members)
    for member in chosen:
        if not (1 <= member <= instance.n):
            raise InvalidSelectionError(f"player {member} out of range 1..{instance.n}")
    if instance.mode is ObjectiveMode.COVER_REWARD_HIT_PENALTY:
        gained = sum(ws.weight for ws in instance.reward_sets if ws.members <= chosen)
        lost = sum(ws.weight for ws in instance.penalty_sets if ws.members & chosen)
    else:
        gained = sum(ws.weight for ws in instance.reward_sets if ws.members & chosen)
        lost = sum(ws.weight for ws in instance.penalty_sets if ws.members <= chosen)
    return gained - lost


def generate(
    config: InstanceConfig,
    mode: ObjectiveMode = ObjectiveMode.HIT_REWARD_COVER_PENALTY,
) -> Instance:
    """Draw a random instance: r reward / p penalty sets, sizes 1..ceil(beta*n),
    integer weights 1..100.  Identical config (and mode) gives an identical
    instance.
    """
    if config.n == 0 and config.r + config.p > 0:
        raise InfeasibleConfigError("cannot draw nonempty sets from 0 players")
    rng = random.Random(config.seed)
    max_size = max(1, math.ceil(config.beta * config.n)) if config.n else 0

    def draw(count: int) -> tuple[WeightedSet, ...]:
        out = []
        for _ in range(count):
            size = rng.randint(1, max_size)
            members = frozenset(rng.sample(range(1, config.n + 1), size))
            out.append(WeightedSet(members, float(rng.randint(1, 100))))
        return tuple(out)

    return Instance(n=config.n, reward_sets=draw(config.r), penalty_sets=draw(config.p), mode=mode)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def _masks(sets: Sequence[WeightedSet]) -> tuple[np.ndarray, np.ndarray]:
    masks = np.array([sum(1 << (m - 1) for m in ws.members) for ws in sets], dtype=np.int64)
    weights = np.array([ws.weight for ws in sets], dtype=np.float64)
    return masks, weights


def _lex_min_mask(masks: np.ndarray) -> int:
    """Smallest mask under lexicographic order of the sorted member tuples.

    Greedy on the lowest set bit: the empty remainder wins outright (a shorter
    tuple precedes its extensions), otherwise candidates with the smallest
    remaining element survive and that element is stripped.
    """
    cand = masks
    prefix = 0
    while True:
        if (cand == 0).any():
            return prefix
        low = cand & -cand
        b = low.min()
        cand = cand[low == b] & ~b
        prefix |= int(b)


def brute_force(instance: Instance, cap: int = BRUTE_FORCE_CAP) -> Selection:
    """Exact optimum by enumerating all 2^n selections (n <= cap).

    Ties are broken toward the lexicographically smallest member set, making
    the oracle deterministic for differential tests.
    """
    bad = validate(instance)
    if bad:
        raise ValidationError("; ".join(bad))
    n = instance.n
    if n > cap:
        raise SizeLimitError(
            f"n={n} exceeds the enumeration cap {cap}; use a polynomial solver"
        )
    rmasks, rweights = _masks(instance.reward_sets)
    pmasks, pweights = _masks(instance.penalty_sets)
    cover_rewards = instance.mode is ObjectiveMode.COVER_REWARD_HIT_PENALTY

    best_value = -math.inf
    best_mask = 0
    total = 1 << n
    step = 1 << min(_CHUNK_BITS, n)
    for start in range(0, total, step):
        sel = np.arange(start, min(start + step, total), dtype=np.int64)[:, None]
        zero = np.zeros(sel.shape[0], dtype=np.float64)
        if cover_rewards:
            gained = ((sel & rmasks) == rmasks) @ rweights if len(rmasks) else zero
            lost = ((sel & pmasks) != 0) @ pweights if len(pmasks) else zero
        else:
            gained = ((sel & rmasks) != 0) @ rweights if len(rmasks) else zero
            lost = ((sel & pmasks) == pmasks) @ pweights if len(pmasks) else zero
        values = np.asarray(gained - lost, dtype=np.float64).reshape(-1)
        chunk_best = values.max()
        if chunk_best < best_value:
            continue
        ties = sel.reshape(-1)[values == chunk_best]
        candidate = _lex_min_mask(ties)
        if chunk_best > best_value:
            best_value, best_mask = chunk_best, candidate
        else:
            best_mask = _lex_min_mask(np.array([best_mask, candidate], dtype=np.int64))
    members = frozenset(i + 1 for i in range(n) if best_mask >> i & 1)
    return Selection(members=members, value=float(best_value))


# ---------------------------------------------------------------------------
# serialization (strict JSON)
# ---------------------------------------------------------------------------

_MODE_NAMES = {m.value: m for m in ObjectiveMode}


def _parse_weighted_set(obj: object, label: str) -> WeightedSet:
    if not isinstance(obj, dict):
        raise FormatError(f"{label}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - {"members", "weight"}
    if unknown:
        raise FormatError(f"{label}: unknown keys {sorted(unknown)}")
    members = obj.get("members")
    weight = obj.get("weight")
    if not isinstance(members, list) or not all(
        isinstance(m, int) and not isinstance(m, bool) for m in members
    ):
        raise FormatError(f"{label}: 'members' must be a list of integers")
    if not isinstance(weight, (int, float)) or isinstance(weight, bool):
        raise FormatError(f"{label}: 'weight' must be a number")
    return WeightedSet(frozenset(members), float(weight))


def instance_from_dict(data: object) -> Instance:
    """Parse the JSON object form; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise FormatError("instance must be a JSON object")
    unknown = set(data) - {"n", "mode", "reward_sets", "penalty_sets"}
    if unknown:
        raise FormatError(f"unknown instance keys {sorted(unknown)}")
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise FormatError("'n' must be a nonnegative integer")
    mode_name = data.get("mode")
    if mode_name not in _MODE_NAMES:
        raise FormatError(f"'mode' must be one of {sorted(_MODE_NAMES)}")
    rewards = data.get("reward_sets", [])
    penalties = data.get("penalty_sets", [])
    if not isinstance(rewards, list) or not isinstance(penalties, list):
        raise FormatError("'reward_sets' and 'penalty_sets' must be arrays")
    instance = Instance(
        n=n,
        reward_sets=tuple(
            _parse_weighted_set(o, f"reward_sets[{i}]") for i, o in enumerate(rewards)
        ),
        penalty_sets=tuple(
            _parse_weighted_set(o, f"penalty_sets[{i}]") for i, o in enumerate(penalties)
        ),
        mode=_MODE_NAMES[mode_name],
    )
    bad = validate(instance)
    if bad:
        raise FormatError("; ".join(bad))
    return instance


def instance_to_dict(instance: Instance) -> dict:
    return {
        "n": instance.n,
        "mode": instance.mode.value,
        "reward_sets": [
            {"members": sorted(ws.members), "weight": ws.weight} for ws in instance.reward_sets
        ],
        "penalty_sets": [
            {"members": sorted(ws.members), "weight": ws.weight} for ws in instance.penalty_sets
        ],
    }


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    return instance_from_dict(data)


def dump_instance(instance: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2, sort_keys=True)
        fh.write("\n")
