"""Integer program, LP relaxation, arithmetic rounding and quality metrics.

The model has one 0/1 variable per player (x), per reward set (y) and per
penalty set (z), one constraint per set, and maximizes the weighted y minus
the weighted z. Under the hit-reward objective the constraints are

    y_i <= sum of x over the reward set's members
    sum of x over the penalty set's members - (size - 1) <= z_j

so y can only pay out once a member is chosen and z is forced up exactly when
the whole penalty set is chosen. The cover-reward objective swaps the roles:
the aggregated rows become |A| y_i <= sum x and sum x <= |B| z_j, keeping one
constraint per set (the LP is weaker on those scaled rows, which is part of
what the rounding metrics measure).

Metrics per trial: delta counts the player-variable disagreements between the
rounded selection and a canonical exact optimum (the lexicographically
smallest one, so ties cannot wobble the metric), and alpha is rounded value
over optimal value, defined as 1 when both are 0 and left out of averages
(and logged) when only the optimum is 0.
"""
from __future__ import annotations

import logging
import math
import random
import re
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import (
    BRUTE_FORCE_CAP,
    VALUE_TOL,
    FormatError,
    Instance,
    InstanceConfig,
    ObjectiveMode,
    RpspError,
    Selection,
    ValidationError,
    brute_force,
    evaluate,
    generate,
    validate,
)

log = logging.getLogger(__name__)

_RESIDUAL_TOL = 1e-7


class SolverError(RpspError):
    """The LP solver failed or returned an infeasible point."""


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IPModel:
    """0/1 program over x (players), y (reward sets), z (penalty sets).

    Constraints are stored as (coefficient map, rhs) rows meaning
    sum(coef * var) <= rhs. Variable order: x_1..x_n, y_1..y_h, z_1..z_l.
    """

    instance: Instance
    num_x: int
    num_y: int
    num_z: int
    objective: tuple[float, ...]
    constraints: tuple[tuple[dict[int, float], float], ...]
    names: tuple[str, ...]

    @property
    def num_variables(self) -> int:
        return self.num_x + self.num_y + self.num_z


@dataclass(frozen=True)
class FractionalSolution:
    model: IPModel
    x: tuple[float, ...]
    y: tuple[float, ...]
    z: tuple[float, ...]
    value: float


@dataclass(frozen=True)
class RelaxationReport:
    fractional: FractionalSolution
    rounded: Selection
    optimum: float
    delta_round: int
    alpha: float | None


def build_ip(instance: Instance) -> IPModel:
    """One constraint per set; n + h + l variables."""
    issues = validate(instance)
    if issues:
        raise ValidationError("; ".join(issues))
    n, h, l = instance.n, len(instance.reward_sets), len(instance.penalty_sets)
    hit = instance.mode is ObjectiveMode.HIT_REWARD_COVER_PENALTY
    objective = [0.0] * n + [ws.weight for ws in instance.reward_sets] + [
        -ws.weight for ws in instance.penalty_sets
    ]
    constraints: list[tuple[dict[int, float], float]] = []
    for i, ws in enumerate(instance.reward_sets):
        y = n + i
        coefs = {u - 1: -1.0 for u in ws.members}
        # hit: y <= sum x; cover: |A| y <= sum x (y pays only when complete)
        coefs[y] = 1.0 if hit else float(len(ws.members))
        constraints.append((coefs, 0.0))
    for j, ws in enumerate(instance.penalty_sets):
        z = n + h + j
        coefs = {u - 1: 1.0 for u in ws.members}
        if hit:
            # sum x - (|B| - 1) <= z
            coefs[z] = -1.0
            constraints.append((coefs, float(len(ws.members) - 1)))
        else:
            # any chosen member forces z up: sum x <= |B| z
            coefs[z] = -float(len(ws.members))
            constraints.append((coefs, 0.0))
    names = (
        tuple(f"x{u}" for u in range(1, n + 1))
        + tuple(f"y{i}" for i in range(1, h + 1))
        + tuple(f"z{j}" for j in range(1, l + 1))
    )
    return IPModel(
        instance=instance,
        num_x=n,
        num_y=h,
        num_z=l,
        objective=tuple(objective),
        constraints=tuple(constraints),
        names=names,
    )


# ---------------------------------------------------------------------------
# LP relaxation
# ---------------------------------------------------------------------------


def solve_lp(model: IPModel) -> FractionalSolution:
    """Optimal basic solution of the [0,1]-relaxation."""
    nvars = model.num_variables
    if nvars == 0:
        return FractionalSolution(model=model, x=(), y=(), z=(), value=0.0)
    c = -np.array(model.objective)
    a_ub = b_ub = None
    if model.constraints:
        a_ub = np.zeros((len(model.constraints), nvars))
        b_ub = np.zeros(len(model.constraints))
        for row, (coefs, rhs) in enumerate(model.constraints):
            for var, coef in coefs.items():
                a_ub[row, var] = coef
            b_ub[row] = rhs
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(0.0, 1.0)] * nvars, method="highs-ds")
    if not res.success:
        raise SolverError(f"LP solve failed (status {res.status}): {res.message}")
    v = res.x
    worst = max(0.0, float(np.max(-v)), float(np.max(v - 1.0)))
    if a_ub is not None:
        worst = max(worst, float(np.max(a_ub @ v - b_ub, initial=0.0)))
    if worst > _RESIDUAL_TOL:
        raise SolverError(f"LP point violates constraints by {worst:.3e}")
    value = float(np.dot(model.objective, v))
    x = tuple(float(t) for t in v[: model.num_x])
    y = tuple(float(t) for t in v[model.num_x : model.num_x + model.num_y])
    z = tuple(float(t) for t in v[model.num_x + model.num_y :])
    return FractionalSolution(model=model, x=x, y=y, z=z, value=value)


def round_solution(fractional: FractionalSolution) -> Selection:
    """Arithmetic rounding of the player variables at 0.5; the value is
    recomputed from the instance, never from the rounded y/z."""
    members = frozenset(
        u for u, xv in enumerate(fractional.x, start=1) if xv >= 0.5 - 1e-9
    )
    value = evaluate(fractional.model.instance, members)
    return Selection(members=members, value=value)


# ---------------------------------------------------------------------------
# per-trial report and the experiment harness
# ---------------------------------------------------------------------------


def _exact_optimum(instance: Instance, exact: str) -> Selection:
    if exact == "brute":
        return brute_force(instance)
    if exact == "treedp":
        from .treedp import build_reduced_graph, exact_decomposition, solve_treedp

        graph = build_reduced_graph(instance)
        decomp = exact_decomposition(graph.nodes, graph.edges)
        return solve_treedp(instance, decomp)
    raise ValidationError(f"unknown exact solver {exact!r}")


def relax_and_round(instance: Instance, exact: str = "brute") -> RelaxationReport:
    """Solve the relaxation, round, and compare against an exact optimum."""
    model = build_ip(instance)
    fractional = solve_lp(model)
    rounded = round_solution(fractional)
    best = _exact_optimum(instance, exact)
    delta = len(best.members ^ rounded.members)
    if best.value > VALUE_TOL:
        alpha: float | None = rounded.value / best.value
    elif abs(rounded.value) <= VALUE_TOL:
        alpha = 1.0
    else:
        alpha = None
        log.info(
            "alpha undefined (optimum 0, rounded %s); trial excluded from averages",
            rounded.value,
        )
    return RelaxationReport(
        fractional=fractional,
        rounded=rounded,
        optimum=best.value,
        delta_round=delta,
        alpha=alpha,
    )


@dataclass(frozen=True)
class ExperimentRow:
    config: InstanceConfig
    trials: int
    delta_avg: float | None
    delta_max: int | None
    alpha_avg: float | None
    alpha_min: float | None
    excluded: int = 0
    note: str = ""


#: published reference results at industrial-solver scale, for banner output
#: only; they are out of reach of the in-process exact solvers.
REFERENCE_ROWS: tuple[tuple[int, int, int, float, float, int, float, float], ...] = (
    (100, 100, 100, 0.25, 13.743, 31, 0.958, 0.574),
    (100, 100, 100, 0.5, 7.01, 24, 0.974, 0.451),
    (100, 100, 100, 0.75, 1.646, 19, 0.995, 0.763),
    (100, 100, 100, 1.0, 0.725, 13, 0.9997, 0.913),
    (100, 150, 50, 1.0, 0.325, 7, 0.9997, 0.928),
    (100, 50, 150, 1.0, 1.278, 15, 0.997, 0.658),
)


def _exact_feasible(config: InstanceConfig, exact: str) -> bool:
    if exact == "brute":
        return config.n <= BRUTE_FORCE_CAP
    if exact == "treedp":
        # generated sets are singletons only when ceil(beta*n) == 1, and the
        # exact decomposer is capped at 20 nodes
        return math.ceil(config.beta * config.n) <= 1 and config.n + config.p <= 20
    raise ValidationError(f"unknown exact solver {exact!r}")


def run_experiment(
    config: InstanceConfig,
    trials: int,
    exact: str = "brute",
    mode: ObjectiveMode = ObjectiveMode.HIT_REWARD_COVER_PENALTY,
) -> ExperimentRow:
    """Aggregate rounding quality over seeded random trials of one config."""
    if trials < 0:
        raise ValidationError("trials must be nonnegative")
    if not _exact_feasible(config, exact):
        return ExperimentRow(
            config=config,
            trials=0,
            delta_avg=None,
            delta_max=None,
            alpha_avg=None,
            alpha_min=None,
            note="not reproducible at this scale",
        )
    rng = random.Random(config.seed)
    deltas: list[int] = []
    alphas: list[float] = []
    excluded = 0
    for _ in range(trials):
        sub = InstanceConfig(
            config.n, config.r, config.p, config.beta, seed=rng.randrange(2**32)
        )
        report = relax_and_round(generate(sub, mode), exact=exact)
        deltas.append(report.delta_round)
        if report.alpha is None:
            excluded += 1
        else:
            alphas.append(report.alpha)
    return ExperimentRow(
        config=config,
        trials=trials,
        delta_avg=sum(deltas) / len(deltas) if deltas else None,
        delta_max=max(deltas) if deltas else None,
        alpha_avg=sum(alphas) / len(alphas) if alphas else None,
        alpha_min=min(alphas) if alphas else None,
        excluded=excluded,
    )


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def experiment_csv(rows, include_reference: bool = True) -> str:
    """CSV report; reference rows appear as comment lines up front."""
    lines = ["n,r,p,beta,delta_avg,delta_max,alpha_avg,alpha_min"]
    if include_reference:
        lines.append("# published reference rows (industrial-solver scale, not reproduced here):")
        for ref in REFERENCE_ROWS:
            lines.append("# " + ",".join(_csv_cell(v) for v in ref))
    for row in rows:
        cfg = row.config
        cells = [
            str(cfg.n),
            str(cfg.r),
            str(cfg.p),
            _csv_cell(cfg.beta),
            _csv_cell(row.delta_avg),
            _csv_cell(row.delta_max),
            _csv_cell(row.alpha_avg),
            _csv_cell(row.alpha_min),
        ]
        line = ",".join(cells)
        if row.note:
            line += f" # {row.note}"
        lines.append(line)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# CPLEX-LP text format
# ---------------------------------------------------------------------------


def _num(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def _terms(coefs: list[tuple[float, str]]) -> str:
    parts: list[str] = []
    for coef, name in coefs:
        if coef == 0:
            continue
        mag = abs(coef)
        body = name if mag == 1 else f"{_num(mag)} {name}"
        if not parts:
            parts.append(body if coef > 0 else f"- {body}")
        else:
            parts.append(f"{'+' if coef > 0 else '-'} {body}")
    return " ".join(parts)


def export_lp(model: IPModel, relaxation: bool = False) -> str:
    """CPLEX-LP text: objective, one row per constraint, unit bounds, and a
    Binary section unless exporting the relaxation."""
    obj_terms = [
        (coef, model.names[idx]) for idx, coef in enumerate(model.objective)
    ]
    obj = _terms(obj_terms)
    if not obj:
        obj = f"0 {model.names[0]}" if model.names else "0"
    lines = ["Maximize", f" obj: {obj}", "Subject To"]
    for row, (coefs, rhs) in enumerate(model.constraints, start=1):
        body = _terms(sorted(((c, model.names[i]) for i, c in coefs.items()), key=lambda t: t[1]))
        lines.append(f" c{row}: {body} <= {_num(rhs)}")
    lines.append("Bounds")
    lines.extend(f" 0 <= {name} <= 1" for name in model.names)
    if not relaxation:
        lines.append("Binary")
        lines.extend(f" {name}" for name in model.names)
    lines.append("End")
    return "\n".join(lines) + "\n"


def parse_lp_dimensions(text: str) -> tuple[int, int]:
    """(variables, constraints) of a CPLEX-LP text, for export sanity checks."""
    if "Maximize" not in text or "End" not in text:
        raise FormatError("not a CPLEX-LP text (missing Maximize/End)")
    names = set(re.findall(r"\b[a-zA-Z]\w*\b", text))
    names -= {"Maximize", "Subject", "To", "Bounds", "Binary", "End", "obj"}
    names -= {m for m in names if re.fullmatch(r"c\d+", m)}
    section = None
    constraints = 0
    for raw in text.splitlines():
        line = raw.strip()
        if line in ("Maximize", "Subject To", "Bounds", "Binary", "End"):
            section = line
            continue
        if section == "Subject To" and ":" in line:
            constraints += 1
    return len(names), constraints
