"""Time-indexed defense action scheduling.

Each attack scenario is a machine with an ordered job sequence; a global
defender action at time t lets one new job start per machine at t. The
model chooses at most ``budget`` action times on the integer grid
{0..T} and maximizes the total scheduled attack duration, which equals
minimizing the time machines sit idle (under attacker control).

Constraints, per machine m with jobs j (durations d) and times t, u:

* each job starts at most once,
* a job may start only if its predecessor does,
* consecutive jobs do not overlap and every job completes within T:
  ``(d_mj + t) y_mjt + (T - u) y_mku <= T``,
* a job start requires an action at that time, at most one job per
  machine per time,
* every action starts at least one job on some machine,
* at most ``budget`` actions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .milp import BinaryProgram, Solution, SENSE_EQ, SENSE_GE, SENSE_LE
from .scenarios import AttackScenario


@dataclass(frozen=True)
class SchedulingInstance:
    """Scenario set, horizon and defender action budget."""

    scenarios: tuple[AttackScenario, ...]
    horizon: int
    budget: int

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        for s in self.scenarios:
            for job in s.jobs:
                if job.duration > self.horizon:
                    raise ValueError(
                        f"job duration {job.duration} exceeds horizon {self.horizon} "
                        f"on machine {s.machine_id}")

    @property
    def machines(self) -> int:
        return len(self.scenarios)

    def durations(self, m: int) -> tuple[int, ...]:
        return self.scenarios[m].durations


@dataclass
class ScheduleModel:
    """A built scheduling program plus its variable handles."""

    instance: SchedulingInstance
    model: BinaryProgram
    x: dict[int, object]                    # t -> VarId
    y: dict[tuple[int, int, int], object]   # (machine, job, t) -> VarId


def _start_windows(inst: SchedulingInstance, preprocess: bool) -> dict[tuple[int, int], range]:
    """Feasible start times per (machine, job index).

    Preprocessing drops starts before the earliest completion of all
    predecessors, starts whose job would overrun the horizon, and jobs
    whose index exceeds the action budget (at most one job per machine
    can start per action). None of these change the optimum.
    """
    T = inst.horizon
    windows: dict[tuple[int, int], range] = {}
    for m, scenario in enumerate(inst.scenarios):
        earliest = 0
        for j, job in enumerate(scenario.jobs):
            if preprocess:
                if j >= inst.budget:
                    windows[(m, j)] = range(0)
                    continue
                windows[(m, j)] = range(earliest, T - job.duration + 1)
                earliest += job.duration
            else:
                windows[(m, j)] = range(0, T + 1)
    return windows


def build_schedule_model(inst: SchedulingInstance, preprocess: bool = True) -> ScheduleModel:
    """Build the scheduling program over the time grid {0..T}."""
    T = inst.horizon
    model = BinaryProgram(name="defense-schedule")
    x = {t: model.add_var(f"x[{t}]") for t in range(T + 1)}
    windows = _start_windows(inst, preprocess)
    y: dict[tuple[int, int, int], object] = {}
    for m, scenario in enumerate(inst.scenarios):
        for j in range(len(scenario.jobs)):
            for t in windows[(m, j)]:
                y[(m, j, t)] = model.add_var(f"y[{m},{j},{t}]")

    def y_terms(m: int, j: int, coef=1):
        return [(coef, y[(m, j, t)]) for t in windows[(m, j)]]

    for m, scenario in enumerate(inst.scenarios):
        d = scenario.durations
        njobs = len(scenario.jobs)
        for j in range(njobs):
            if windows[(m, j)]:
                model.add_constraint(y_terms(m, j), SENSE_LE, 1, f"schedule_once[{m},{j}]")
        for j in range(njobs - 1):
            k = j + 1
            terms = y_terms(m, j) + y_terms(m, k, coef=-1)
            if terms:
                model.add_constraint(terms, SENSE_GE, 0, f"order[{m},{j}->{k}]")
            for t in windows[(m, j)]:
                for u in windows[(m, k)]:
                    terms = [(d[j] + t, y[(m, j, t)])]
                    if T - u != 0:
                        terms.append((T - u, y[(m, k, u)]))
                    model.add_constraint(terms, SENSE_LE, T, f"no_overlap[{m},{j}@{t},{k}@{u}]")
        # Completion bound for the last job (no successor pair covers it).
        if njobs:
            j = njobs - 1
            for t in windows[(m, j)]:
                if t + d[j] > T:
                    model.add_constraint([(d[j] + t, y[(m, j, t)])], SENSE_LE, T,
                                         f"completes[{m},{j}@{t}]")

    for m in range(inst.machines):
        for t in range(T + 1):
            terms = [(1, y[(m, j, t)]) for j in range(len(inst.scenarios[m].jobs))
                     if (m, j, t) in y]
            if terms:
                model.add_constraint(terms + [(-1, x[t])], SENSE_LE, 0,
                                     f"job_requires_action[{m},{t}]")
    for t in range(T + 1):
        terms = [(1, y[(m, j, t)]) for m in range(inst.machines)
                 for j in range(len(inst.scenarios[m].jobs)) if (m, j, t) in y]
        model.add_constraint(terms + [(-1, x[t])], SENSE_GE, 0, f"action_starts_job[{t}]")
    model.add_constraint([(1, x[t]) for t in range(T + 1)], SENSE_LE, inst.budget,
                         "action_budget")

    model.set_objective("max", [
        (inst.scenarios[m].jobs[j].duration, var) for (m, j, _t), var in y.items()
    ])
    return ScheduleModel(instance=inst, model=model, x=x, y=y)


@dataclass(frozen=True)
class DefenseSchedule:
    """Solved schedule: action times and per-machine job start times."""

    horizon: int
    budget: int
    action_times: tuple[int, ...]
    job_starts: dict[tuple[int, int], int]  # (machine, job) -> start time
    objective: int

    def validate(self, inst: SchedulingInstance) -> None:
        """Re-check the schedule invariants without the solver."""
        if len(self.action_times) > inst.budget:
            raise ValueError("more actions than the budget allows")
        actions = set(self.action_times)
        for (m, j), t in self.job_starts.items():
            if t not in actions:
                raise ValueError(f"job ({m},{j}) starts off-action at t={t}")
        for m, scenario in enumerate(inst.scenarios):
            d = scenario.durations
            starts = [(j, t) for (mm, j), t in self.job_starts.items() if mm == m]
            starts.sort()
            scheduled = [j for j, _ in starts]
            if scheduled != list(range(len(scheduled))):
                raise ValueError(f"machine {m}: scheduled jobs are not a prefix in order")
            for (j, t), (k, u) in zip(starts, starts[1:]):
                if u < t + d[j]:
                    raise ValueError(f"machine {m}: jobs {j} and {k} overlap")
            for j, t in starts:
                if t + d[j] > inst.horizon:
                    raise ValueError(f"machine {m}: job {j} overruns the horizon")
        total = sum(inst.scenarios[m].jobs[j].duration for (m, j) in self.job_starts)
        if total != self.objective:
            raise ValueError("objective does not match scheduled durations")

    def to_json(self) -> dict:
        return {
            "T": self.horizon,
            "beta": self.budget,
            "actions": list(self.action_times),
            "starts": [{"machine": m, "job": j, "t": t}
                       for (m, j), t in sorted(self.job_starts.items())],
            "objective": self.objective,
        }

    @staticmethod
    def from_json(doc: dict) -> "DefenseSchedule":
        return DefenseSchedule(
            horizon=doc["T"],
            budget=doc["beta"],
            action_times=tuple(doc["actions"]),
            job_starts={(s["machine"], s["job"]): s["t"] for s in doc["starts"]},
            objective=doc["objective"],
        )


def extract_schedule(smodel: ScheduleModel, sol: Solution) -> DefenseSchedule:
    """Read the schedule off an optimal solution and re-validate it."""
    if not sol.is_optimal:
        raise ValueError(f"cannot extract a schedule from a {sol.status} solution")
    inst = smodel.instance
    assignment = sol.assignment
    action_times = tuple(t for t in range(inst.horizon + 1) if assignment[smodel.x[t]] == 1)
    job_starts = {(m, j): t for (m, j, t), var in smodel.y.items() if assignment[var] == 1}
    schedule = DefenseSchedule(
        horizon=inst.horizon,
        budget=inst.budget,
        action_times=action_times,
        job_starts=job_starts,
        objective=int(sol.objective_value),
    )
    schedule.validate(inst)
    return schedule
