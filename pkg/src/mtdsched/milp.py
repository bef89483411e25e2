"""Pure-binary linear programs with exact rational coefficients.

A ``BinaryProgram`` is a list of 0/1 variables, linear constraints and a
linear objective. Coefficients are stored as ``fractions.Fraction`` so
that feasibility and objective values are exact; there is no tolerance
anywhere in the model layer. Solving lives in :mod:`mtdsched.solver`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

Coefficient = int | Fraction

SENSE_LE = "<="
SENSE_GE = ">="
SENSE_EQ = "="
_SENSES = (SENSE_LE, SENSE_GE, SENSE_EQ)

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_BUDGET_EXCEEDED = "budget_exceeded"


class ModelError(ValueError):
    """Raised for malformed models: duplicate labels, unknown variables."""


@dataclass(frozen=True, order=True)
class VarId:
    """Handle for one binary decision variable."""

    index: int
    label: str = field(compare=False)


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * var) sense rhs`` over binary variables.

    ``tag`` names the modelling rule the constraint instantiates; it is
    kept verbatim in LP export and error messages.
    """

    terms: tuple[tuple[Fraction, VarId], ...]
    sense: str
    rhs: Fraction
    tag: str

    def __post_init__(self) -> None:
        if self.sense not in _SENSES:
            raise ModelError(f"unknown sense {self.sense!r}")
        if not self.tag:
            raise ModelError("constraint tag must be non-empty")
        seen = set()
        for _, var in self.terms:
            if var.index in seen:
                raise ModelError(f"duplicate variable {var.label!r} in constraint {self.tag!r}")
            seen.add(var.index)

    def evaluate(self, assignment: Mapping[VarId, int]) -> Fraction:
        return sum((c * assignment[v] for c, v in self.terms), start=Fraction(0))

    def satisfied_by(self, assignment: Mapping[VarId, int]) -> bool:
        lhs = self.evaluate(assignment)
        if self.sense == SENSE_LE:
            return lhs <= self.rhs
        if self.sense == SENSE_GE:
            return lhs >= self.rhs
        return lhs == self.rhs


def _as_terms(terms: Iterable[tuple[Coefficient, VarId]]) -> tuple[tuple[Fraction, VarId], ...]:
    return tuple((Fraction(c), v) for c, v in terms)


@dataclass
class BinaryProgram:
    """A binary linear program under construction."""

    name: str = "model"
    vars: list[VarId] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    objective_sense: str = "min"
    objective: tuple[tuple[Fraction, VarId], ...] = ()

    def __post_init__(self) -> None:
        self._labels: dict[str, VarId] = {v.label: v for v in self.vars}

    def add_var(self, label: str) -> VarId:
        """Append a fresh binary variable; labels must be unique."""
        if label in self._labels:
            raise ModelError(f"variable label {label!r} already used")
        var = VarId(len(self.vars), label)
        self.vars.append(var)
        self._labels[label] = var
        return var

    def var_by_label(self, label: str) -> VarId:
        return self._labels[label]

    def _check_known(self, terms: Iterable[tuple[Fraction, VarId]], where: str) -> None:
        n = len(self.vars)
        for _, var in terms:
            if var.index >= n or self.vars[var.index] is not var:
                raise ModelError(f"unknown variable {var.label!r} in {where}")

    def add_constraint(
        self,
        terms: Iterable[tuple[Coefficient, VarId]],
        sense: str,
        rhs: Coefficient,
        tag: str,
    ) -> LinearConstraint:
        """Append a constraint and return it as a handle."""
        constraint = LinearConstraint(_as_terms(terms), sense, Fraction(rhs), tag)
        self._check_known(constraint.terms, f"constraint {tag!r}")
        self.constraints.append(constraint)
        return constraint

    def set_objective(self, sense: str, terms: Iterable[tuple[Coefficient, VarId]]) -> None:
        if sense not in ("min", "max"):
            raise ModelError(f"objective sense must be 'min' or 'max', got {sense!r}")
        parsed = _as_terms(terms)
        self._check_known(parsed, "objective")
        seen = set()
        for _, var in parsed:
            if var.index in seen:
                raise ModelError(f"duplicate variable {var.label!r} in objective")
            seen.add(var.index)
        self.objective_sense = sense
        self.objective = parsed

    def linearize_product(self, x: VarId, y: VarId) -> VarId:
        """Add ``w = x * y`` via the three McCormick inequalities.

        For binary x, y the envelope is exact: w <= x, w <= y and
        w >= x + y - 1 force w to equal the product in every feasible
        assignment.
        """
        self._check_known([(Fraction(1), x), (Fraction(1), y)], "product")
        label = f"{x.label}&{y.label}"
        if label in self._labels:
            suffix = 2
            while f"{label}#{suffix}" in self._labels:
                suffix += 1
            label = f"{label}#{suffix}"
        w = self.add_var(label)
        tag = f"product({x.label},{y.label})"
        self.add_constraint([(1, w), (-1, x)], SENSE_LE, 0, tag + ":le_x")
        self.add_constraint([(1, w), (-1, y)], SENSE_LE, 0, tag + ":le_y")
        self.add_constraint([(1, w), (-1, x), (-1, y)], SENSE_GE, -1, tag + ":ge_sum")
        return w

    def objective_value(self, assignment: Mapping[VarId, int]) -> Fraction:
        return sum((c * assignment[v] for c, v in self.objective), start=Fraction(0))

    def check_feasible(self, assignment: Mapping[VarId, int]) -> bool:
        """Exact feasibility check, independent of any solver state."""
        for var in self.vars:
            if assignment[var] not in (0, 1):
                return False
        return all(c.satisfied_by(assignment) for c in self.constraints)

    def violated_constraints(self, assignment: Mapping[VarId, int]) -> list[LinearConstraint]:
        return [c for c in self.constraints if not c.satisfied_by(assignment)]


@dataclass(frozen=True)
class Solution:
    """Result of one solve: a variable assignment plus a status flag.

    ``status`` is one of ``optimal`` (assignment is provably optimal),
    ``infeasible`` (no feasible assignment exists; fields are None) or
    ``budget_exceeded`` (search limits hit; assignment is the best
    incumbent found, or None if none was found).
    """

    assignment: dict[VarId, int] | None
    objective_value: Fraction | None
    status: str
    nodes: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL
