"""Attack scenario generation.

A scenario is an ordered sequence of attack steps, each with an integer
time-to-success. Step lengths are drawn from kind-specific uniform
intervals proportional to the attack scale, rounded to the integer time
grid and clamped to at least one time unit. Four scenario templates
compose the steps; generation appends steps while the next sampled step
still fits within the horizon and stops at the first one that does not.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class AttackKind(str, enum.Enum):
    LONG = "long"
    MEDIUM = "medium"
    SHORT = "short"


class ScenarioKind(str, enum.Enum):
    CALIBRATED = "calibrated"
    LATERAL_MOVEMENT = "lateral_movement"
    RANSOMWARE = "ransomware"
    ZERO_DAY = "zero_day"


# Sampling interval per attack kind, as fractions of the attack scale.
SAMPLING_INTERVALS: dict[AttackKind, tuple[float, float]] = {
    AttackKind.LONG: (0.10, 0.30),
    AttackKind.MEDIUM: (0.05, 0.15),
    AttackKind.SHORT: (0.0025, 0.075),
}


class ScenarioError(ValueError):
    """Raised when a scenario template cannot fit its mandatory steps."""


@dataclass(frozen=True)
class AttackJob:
    """One attack step: its kind, integer duration and 1-based position."""

    kind: AttackKind
    duration: int
    index: int

    def __post_init__(self) -> None:
        if self.duration < 1:
            raise ValueError("attack duration must be >= 1")
        if self.index < 1:
            raise ValueError("job indices start at 1")


@dataclass(frozen=True)
class TimingParams:
    """Horizon, attack scale and the master seed for generation."""

    horizon: int
    attack_scale: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.attack_scale < 1:
            raise ValueError("attack scale must be >= 1")


@dataclass(frozen=True)
class AttackScenario:
    """A machine in the scheduling model: an ordered job sequence."""

    scenario_kind: ScenarioKind
    jobs: tuple[AttackJob, ...]
    machine_id: int

    @property
    def durations(self) -> tuple[int, ...]:
        return tuple(job.duration for job in self.jobs)

    @property
    def total_duration(self) -> int:
        return sum(job.duration for job in self.jobs)


def scenario_rng(seed: int, machine_id: int) -> np.random.Generator:
    """Independent stream per machine id.

    Stream splitting: machine ``i`` draws from
    ``PCG64(SeedSequence(entropy=seed, spawn_key=(i,)))``, so adding or
    removing machines never perturbs the draws of the others.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(machine_id,))))


def sample_attack(kind: AttackKind, params: TimingParams, rng: np.random.Generator,
                  index: int = 1) -> AttackJob:
    """Draw one attack step of the given kind.

    Duration = round(uniform(lo * scale, hi * scale)), clamped to >= 1.
    """
    lo, hi = SAMPLING_INTERVALS[kind]
    raw = rng.uniform(lo * params.attack_scale, hi * params.attack_scale)
    return AttackJob(kind=kind, duration=max(1, int(raw + 0.5)), index=index)


def _duration(kind: AttackKind, params: TimingParams, rng: np.random.Generator) -> int:
    lo, hi = SAMPLING_INTERVALS[kind]
    raw = rng.uniform(lo * params.attack_scale, hi * params.attack_scale)
    return max(1, int(raw + 0.5))


def compose_scenario(kind: ScenarioKind, params: TimingParams,
                     rng: np.random.Generator, machine_id: int = 0) -> AttackScenario:
    """Build one scenario following the kind's template.

    Templates (first steps are mandatory; the rest are appended while
    they fit within the horizon, stopping at the first non-fitting
    sample):

    * calibrated: one long step, then medium/short drawn uniformly,
    * lateral movement: one long step, then repeated blocks of one to
      three short steps followed by one medium step,
    * ransomware: one medium step, one long step resampled until it
      exceeds the medium one, then short steps,
    * zero day: kinds drawn uniformly among long/medium/short; the first
      step is mandatory.
    """
    T = params.horizon
    kinds: list[AttackKind] = []
    durations: list[int] = []
    total = 0

    def mandatory(k: AttackKind, d: int) -> None:
        nonlocal total
        if total + d > T:
            raise ScenarioError(
                f"horizon {T} too small for the mandatory {k.value} step "
                f"of a {kind.value} scenario (needs {total + d})")
        kinds.append(k)
        durations.append(d)
        total += d

    def try_append(k: AttackKind) -> bool:
        nonlocal total
        d = _duration(k, params, rng)
        if total + d > T:
            return False
        kinds.append(k)
        durations.append(d)
        total += d
        return True

    if kind == ScenarioKind.CALIBRATED:
        mandatory(AttackKind.LONG, _duration(AttackKind.LONG, params, rng))
        while try_append(AttackKind.MEDIUM if rng.integers(2) == 0 else AttackKind.SHORT):
            pass
    elif kind == ScenarioKind.LATERAL_MOVEMENT:
        mandatory(AttackKind.LONG, _duration(AttackKind.LONG, params, rng))
        fitting = True
        while fitting:
            for _ in range(int(rng.integers(1, 4))):
                if not try_append(AttackKind.SHORT):
                    fitting = False
                    break
            if fitting:
                fitting = try_append(AttackKind.MEDIUM)
    elif kind == ScenarioKind.RANSOMWARE:
        penetration = _duration(AttackKind.MEDIUM, params, rng)
        mandatory(AttackKind.MEDIUM, penetration)
        discovery = _duration(AttackKind.LONG, params, rng)
        while discovery <= penetration:
            discovery = _duration(AttackKind.LONG, params, rng)
        mandatory(AttackKind.LONG, discovery)
        while try_append(AttackKind.SHORT):
            pass
    elif kind == ScenarioKind.ZERO_DAY:
        choices = (AttackKind.LONG, AttackKind.MEDIUM, AttackKind.SHORT)
        first = choices[int(rng.integers(3))]
        mandatory(first, _duration(first, params, rng))
        while try_append(choices[int(rng.integers(3))]):
            pass
    else:
        raise ValueError(f"unknown scenario kind {kind!r}")

    jobs = tuple(AttackJob(kind=k, duration=d, index=i + 1)
                 for i, (k, d) in enumerate(zip(kinds, durations)))
    return AttackScenario(scenario_kind=kind, jobs=jobs, machine_id=machine_id)


def generate_scenario_set(kinds: list[ScenarioKind], per_kind: int,
                          params: TimingParams) -> list[AttackScenario]:
    """Generate ``per_kind`` scenarios of each kind, machine ids from 0."""
    if per_kind < 1:
        raise ValueError("per_kind must be >= 1")
    scenarios = []
    machine_id = 0
    for kind in kinds:
        for _ in range(per_kind):
            rng = scenario_rng(params.seed, machine_id)
            scenarios.append(compose_scenario(kind, params, rng, machine_id=machine_id))
            machine_id += 1
    return scenarios


def scenario_set_to_json(scenarios: list[AttackScenario], params: TimingParams) -> dict:
    """Interchange document: {T, lambda, seed, scenarios:[{kind, jobs:[...]}]}."""
    return {
        "T": params.horizon,
        "lambda": params.attack_scale,
        "seed": params.seed,
        "scenarios": [
            {
                "kind": s.scenario_kind.value,
                "jobs": [{"kind": j.kind.value, "duration": j.duration} for j in s.jobs],
            }
            for s in scenarios
        ],
    }


def scenario_set_from_json(doc: dict) -> tuple[list[AttackScenario], TimingParams]:
    params = TimingParams(horizon=doc["T"], attack_scale=doc["lambda"], seed=doc.get("seed", 0))
    scenarios = []
    for machine_id, entry in enumerate(doc["scenarios"]):
        jobs = tuple(
            AttackJob(kind=AttackKind(j["kind"]), duration=int(j["duration"]), index=i + 1)
            for i, j in enumerate(entry["jobs"])
        )
        scenarios.append(AttackScenario(
            scenario_kind=ScenarioKind(entry["kind"]), jobs=jobs, machine_id=machine_id))
    return scenarios, params
