"""Reward-penalty selection: exact solvers, LP rounding and graph machinery."""
from rpsp.core import (
    Instance,
    InstanceConfig,
    ObjectiveMode,
    Selection,
    WeightedSet,
    brute_force,
    evaluate,
    generate,
    make_instance,
    validate,
)

__all__ = [
    "Instance",
    "InstanceConfig",
    "ObjectiveMode",
    "Selection",
    "WeightedSet",
    "brute_force",
    "evaluate",
    "generate",
    "make_instance",
    "validate",
]
