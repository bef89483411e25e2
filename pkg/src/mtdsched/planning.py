"""Composite model: defense schedules bound to eligible configurations.

Extends the scheduling program with assignment variables ``a[c,t]``
(configuration c deployed at time t) and three constraint families:

* consecutive jobs on a machine may both be scheduled only if the
  configurations deployed at their start times form an eligible pair;
  the products ``a[c,t] * a[e,f]`` are linearized with McCormick
  envelopes, one shared variable per product, reused across machines,
* configurations are deployed only at action times, at most one per
  time,
* a configuration is deployed at most once over the horizon.

The objective is unchanged: maximize scheduled attack duration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .milp import BinaryProgram, Solution, VarId, SENSE_GE, SENSE_LE
from .placement import Configuration, EligibilityMatrix, distance
from .scheduling import (
    DefenseSchedule,
    ScheduleModel,
    SchedulingInstance,
    build_schedule_model,
    extract_schedule,
)


@dataclass(frozen=True)
class PlanningInstance:
    """Scheduling instance plus the configuration pool and its eligibility."""

    scheduling: SchedulingInstance
    pool: tuple[Configuration, ...]
    eligibility: EligibilityMatrix

    def __post_init__(self) -> None:
        if len(self.pool) < 1:
            raise ValueError("pool must contain at least one configuration")
        if len(self.eligibility.eligible) != len(self.pool):
            raise ValueError("eligibility matrix does not match the pool size")


@dataclass
class PlanModel:
    """Built composite program plus variable handles."""

    instance: PlanningInstance
    schedule_part: ScheduleModel
    model: BinaryProgram
    a: dict[tuple[int, int], VarId]  # (config, t) -> VarId
    products: dict[tuple[int, int], VarId] = field(default_factory=dict)


def build_plan_model(inst: PlanningInstance, preprocess: bool = True) -> PlanModel:
    """Extend the scheduling model with configuration assignment."""
    smodel = build_schedule_model(inst.scheduling, preprocess=preprocess)
    model = smodel.model
    model.name = "mtd-plan"
    T = inst.scheduling.horizon
    n_configs = len(inst.pool)

    a = {(c, t): model.add_var(f"a[{c},{t}]")
         for c in range(n_configs) for t in range(T + 1)}
    for t in range(T + 1):
        terms = [(1, a[(c, t)]) for c in range(n_configs)] + [(-1, smodel.x[t])]
        model.add_constraint(terms, SENSE_LE, 0, f"config_at_action[{t}]")
    for c in range(n_configs):
        model.add_constraint([(1, a[(c, t)]) for t in range(T + 1)], SENSE_LE, 1,
                             f"config_once[{c}]")

    elig = inst.eligibility.eligible
    eligible_pairs = [(c, e) for c in range(n_configs) for e in range(n_configs)
                      if elig[c][e]]

    # One McCormick variable per product of assignment variables, shared
    # across machines and job pairs (keyed by the underlying variable pair).
    products: dict[tuple[int, int], VarId] = {}

    def product(u: VarId, v: VarId) -> VarId:
        key = (u.index, v.index) if u.index <= v.index else (v.index, u.index)
        w = products.get(key)
        if w is None:
            w = model.linearize_product(u, v)
            products[key] = w
        return w

    y = smodel.y
    for m, scenario in enumerate(inst.scheduling.scenarios):
        for j in range(len(scenario.jobs) - 1):
            k = j + 1
            starts_j = [t for t in range(T + 1) if (m, j, t) in y]
            starts_k = [f for f in range(T + 1) if (m, k, f) in y]
            for t in starts_j:
                for f in starts_k:
                    terms = [(1, y[(m, j, t)]), (1, y[(m, k, f)])]
                    for c, e in eligible_pairs:
                        terms.append((-1, product(a[(c, t)], a[(e, f)])))
                    model.add_constraint(terms, SENSE_LE, 1,
                                         f"eligible_pair[{m},{j}@{t},{k}@{f}]")
    return PlanModel(instance=inst, schedule_part=smodel, model=model, a=a,
                     products=products)


@dataclass(frozen=True)
class MtdPlan:
    """A defense schedule with a configuration bound to each used action."""

    schedule: DefenseSchedule
    config_at: dict[int, int]  # action time -> pool index
    kappa: object              # Fraction, from the eligibility matrix
    pool_ref: str | None = None

    def bound_time_pairs(self, inst: SchedulingInstance) -> list[tuple[int, int]]:
        """Distinct (t, f) start-time pairs of consecutive scheduled jobs."""
        pairs = set()
        for m in range(inst.machines):
            starts = sorted((j, t) for (mm, j), t in self.schedule.job_starts.items()
                            if mm == m)
            for (_, t), (_, f) in zip(starts, starts[1:]):
                pairs.add((t, f))
        return sorted(pairs)

    def consecutive_config_pairs(self, inst: SchedulingInstance) -> list[tuple[int, int]]:
        """Pool-index pairs deployed across consecutive jobs, by start time."""
        return [(self.config_at[t], self.config_at[f])
                for t, f in self.bound_time_pairs(inst)]

    @property
    def actions_without_config(self) -> tuple[int, ...]:
        return tuple(t for t in self.schedule.action_times if t not in self.config_at)

    def to_json(self) -> dict:
        doc = self.schedule.to_json()
        doc["config_at"] = [{"t": t, "config_index": c}
                            for t, c in sorted(self.config_at.items())]
        doc["kappa"] = str(self.kappa)
        doc["pool_ref"] = self.pool_ref
        return doc


def extract_plan(pmodel: PlanModel, sol: Solution, pool_ref: str | None = None) -> MtdPlan:
    """Read the plan off an optimal solution and re-validate its invariants.

    Validation is independent of the solver: uniqueness and placement of
    assignments are checked directly, and every consecutive-job pair is
    re-checked against the distance threshold using the exact distance
    function. A violation indicates a model bug and raises RuntimeError.
    """
    if not sol.is_optimal:
        raise ValueError(f"cannot extract a plan from a {sol.status} solution")
    inst = pmodel.instance
    schedule = extract_schedule(pmodel.schedule_part, sol)
    config_at = {t: c for (c, t), var in pmodel.a.items() if sol.assignment[var] == 1}

    configs = list(config_at.values())
    if len(set(configs)) != len(configs):
        raise RuntimeError("model bug: a configuration is deployed more than once")
    actions = set(schedule.action_times)
    if not set(config_at) <= actions:
        raise RuntimeError("model bug: configuration deployed outside action times")
    plan = MtdPlan(schedule=schedule, config_at=config_at,
                   kappa=inst.eligibility.kappa, pool_ref=pool_ref)
    for t, f in plan.bound_time_pairs(inst.scheduling):
        if t not in config_at or f not in config_at:
            raise RuntimeError("model bug: consecutive jobs without deployed configurations")
        c, e = config_at[t], config_at[f]
        if not inst.eligibility.eligible[c][e]:
            raise RuntimeError("model bug: ineligible consecutive configuration pair")
        if distance(inst.pool[c], inst.pool[e]) <= inst.eligibility.kappa:
            raise RuntimeError("model bug: consecutive configurations below the "
                               "distance threshold")
    return plan
