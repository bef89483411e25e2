"""Moving-target-defense scheduling toolkit.

Builds feasible service placement/routing configurations for a service
overlay on a capacitated network, computes optimal defense action
schedules against modeled attack scenarios, and binds eligible
configurations to the scheduled actions. Ships an exact binary-program
solver, metrics and a reproducible experiment harness.
"""

from .milp import (
    BinaryProgram,
    LinearConstraint,
    ModelError,
    Solution,
    VarId,
    SENSE_EQ,
    SENSE_GE,
    SENSE_LE,
    STATUS_BUDGET_EXCEEDED,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
)
from .solver import SolveLimits, solve

__all__ = [
    "BinaryProgram",
    "LinearConstraint",
    "ModelError",
    "Solution",
    "VarId",
    "SENSE_EQ",
    "SENSE_GE",
    "SENSE_LE",
    "STATUS_BUDGET_EXCEEDED",
    "STATUS_INFEASIBLE",
    "STATUS_OPTIMAL",
    "SolveLimits",
    "solve",
]
