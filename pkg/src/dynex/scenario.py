"""Policy experiments and parameter sweeps with steady-state metrics.

A policy is applied without rewriting the model: parameter changes become
run-config overrides or timed events, and a wage floor becomes a clamp on the
offered-salary stock applied at every step boundary from its start time. A
policy with no effective content therefore reproduces the baseline run
bit-exactly.

Latin-hypercube sweeps draw from SplitMix64, a fixed, well-known 64-bit
mixing generator (Steele et al., "Fast splittable pseudorandom number
generators", OOPSLA 2014), so identical seeds give identical sample points on
every platform. Each dimension is stratified into n equal probability bands;
band order is shuffled per dimension by a Fisher-Yates pass driven by the
same stream.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .engine import CompiledModel, RunConfig, _as_compiled, steady_state
from .errors import ConfigError, KeyMismatch, NotConverged
from .model import ModelSpec

WAGE_VAR = "offered_salary"


@dataclass(frozen=True)
class WageFloor:
    """Clamp the offered salary to at least ``w_min`` from time ``from_time``."""

    w_min: float
    from_time: float = 0.0
    var: str = WAGE_VAR

    def __post_init__(self):
        if self.from_time < 0:
            raise ConfigError(f"policy start time must be nonnegative, got {self.from_time}")


@dataclass(frozen=True)
class ParamOverride:
    """Set a parameter to a value, at the start or from a later time."""

    id: str
    value: float
    from_time: float = 0.0

    def __post_init__(self):
        if self.from_time < 0:
            raise ConfigError(f"policy start time must be nonnegative, got {self.from_time}")


@dataclass(frozen=True)
class Composite:
    policies: tuple["Policy", ...]


Policy = Union[WageFloor, ParamOverride, Composite]


def _flatten(policy: Policy | None):
    if policy is None:
        return
    if isinstance(policy, Composite):
        for p in policy.policies:
            yield from _flatten(p)
    else:
        yield policy


def apply_policy(cfg: RunConfig, policy: Policy | None) -> RunConfig:
    """Fold a policy into a run configuration."""
    overrides = dict(cfg.overrides)
    events = list(cfg.events)
    floors = list(cfg.floors)
    for p in _flatten(policy):
        if isinstance(p, ParamOverride):
            if p.from_time <= cfg.t_start:
                overrides[p.id] = p.value
            else:
                events.append((p.from_time, p.id, p.value))
        elif isinstance(p, WageFloor):
            floors.append((p.var, p.w_min, p.from_time))
        else:
            raise ConfigError(f"unknown policy {p!r}")
    return dataclasses.replace(
        cfg, overrides=overrides, events=tuple(events), floors=tuple(floors)
    )


@dataclass(frozen=True)
class ScenarioResult:
    """Steady-state snapshot of one policy run plus derived metrics."""

    name: str
    steady: dict[str, float]
    metrics: dict[str, float]


def compute_metrics(steady: Mapping[str, float]) -> dict[str, float]:
    """Standard labor-market metrics, recomputable from any steady map.

    employment: filled positions; wage: offered salary; output: outcomes per
    time; willing_unhired: people willing at the current terms but not in a
    position (fraction times pool minus the employed). Metrics whose
    variables a model lacks are omitted.
    """
    metrics: dict[str, float] = {}
    if "exploitees" in steady:
        metrics["employment"] = steady["exploitees"]
    if WAGE_VAR in steady:
        metrics["wage"] = steady[WAGE_VAR]
    if "outcomes" in steady:
        metrics["output"] = steady["outcomes"]
    if all(k in steady for k in ("willing_fraction", "potential_exploitees", "exploitees")):
        metrics["willing_unhired"] = (
            steady["willing_fraction"] * steady["potential_exploitees"]
            - steady["exploitees"]
        )
    return metrics


def run_scenario(
    model: ModelSpec | CompiledModel,
    policy: Policy | None,
    cfg: RunConfig,
    name: str = "scenario",
    tol: float = 1e-6,
    window: float = 50.0,
) -> ScenarioResult:
    """Apply the policy, run to steady state, and report metrics.

    NotConverged propagates with the scenario name attached.
    """
    compiled = _as_compiled(model)
    run_cfg = apply_policy(cfg, policy)
    try:
        steady = steady_state(compiled, run_cfg, tol=tol, window=window)
    except NotConverged as exc:
        raise NotConverged(
            f"scenario {name!r}: {exc}", variable=exc.variable, residual=exc.residual
        ) from exc
    return ScenarioResult(name, steady, compute_metrics(steady))


@dataclass(frozen=True)
class GridAxis:
    """Explicit values for one parameter of a full-factorial sweep."""

    id: str
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ConfigError(f"grid axis {self.id} needs at least one value")


@dataclass(frozen=True)
class RangeAxis:
    """A closed interval for one parameter of a Latin-hypercube sweep."""

    id: str
    low: float
    high: float

    def __post_init__(self):
        if not self.high >= self.low:
            raise ConfigError(f"range axis {self.id}: high {self.high} below low {self.low}")


@dataclass(frozen=True)
class SweepPlan:
    """Either all-grid (full factorial, row-major) or all-range (Latin hypercube)."""

    axes: tuple[Union[GridAxis, RangeAxis], ...]
    cfg: RunConfig
    samples: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.axes:
            raise ConfigError("sweep plan needs at least one axis")
        kinds = {type(a) for a in self.axes}
        if len(kinds) > 1:
            raise ConfigError("sweep axes must be all grid or all range, not mixed")
        if kinds == {RangeAxis} and not (self.samples and self.samples >= 1):
            raise ConfigError("a Latin-hypercube sweep needs a positive sample count")

    def points(self) -> list[dict[str, float]]:
        if isinstance(self.axes[0], GridAxis):
            names = [a.id for a in self.axes]
            return [
                dict(zip(names, combo))
                for combo in itertools.product(*(a.values for a in self.axes))
            ]
        return _latin_hypercube(self.axes, self.samples, self.seed)


def _splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step: returns (new_state, 64-bit output)."""
    mask = (1 << 64) - 1
    state = (state + 0x9E3779B97F4A7C15) & mask
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    z ^= z >> 31
    return state, z


class _SplitMix:
    def __init__(self, seed: int):
        self.state = seed & ((1 << 64) - 1)

    def uniform(self) -> float:
        self.state, z = _splitmix64(self.state)
        return (z >> 11) * 2.0**-53

    def shuffled(self, n: int) -> list[int]:
        order = list(range(n))
        for i in range(n - 1, 0, -1):
            self.state, z = _splitmix64(self.state)
            j = z % (i + 1)
            order[i], order[j] = order[j], order[i]
        return order


def _latin_hypercube(axes, n, seed) -> list[dict[str, float]]:
    rng = _SplitMix(seed)
    columns = []
    for axis in axes:
        jitter = [rng.uniform() for _ in range(n)]
        bands = rng.shuffled(n)
        width = axis.high - axis.low
        columns.append(
            [axis.low + width * (bands[i] + jitter[i]) / n for i in range(n)]
        )
    return [
        {axis.id: columns[d][i] for d, axis in enumerate(axes)} for i in range(n)
    ]


@dataclass(frozen=True)
class SweepOutcome:
    point: dict[str, float]
    result: ScenarioResult | None
    error: NotConverged | None = None

    @property
    def converged(self) -> bool:
        return self.result is not None


def sweep(
    model: ModelSpec | CompiledModel,
    plan: SweepPlan,
    tol: float = 1e-6,
    window: float = 50.0,
) -> list[SweepOutcome]:
    """One steady-state run per plan point, in plan enumeration order.

    Non-convergence is recorded per point and never aborts the sweep.
    """
    compiled = _as_compiled(model)
    outcomes = []
    for point in plan.points():
        policy = Composite(tuple(ParamOverride(k, v) for k, v in point.items()))
        name = ",".join(f"{k}={v:g}" for k, v in point.items())
        try:
            result = run_scenario(compiled, policy, plan.cfg, name=name, tol=tol, window=window)
            outcomes.append(SweepOutcome(point, result))
        except NotConverged as exc:
            outcomes.append(SweepOutcome(point, None, exc))
    return outcomes


@dataclass(frozen=True)
class ComparisonRow:
    scenario: str
    metric: str
    value: float
    baseline: float
    diff: float
    pct_diff: float


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]

    def __iter__(self):
        return iter(self.rows)


def compare(results: Sequence[ScenarioResult], baseline: ScenarioResult) -> ComparisonTable:
    """Absolute and percent differences of every metric against a baseline.

    Row order is stable: results in input order, metrics in the baseline's
    key order. All results must share the baseline's metric keys.
    """
    keys = list(baseline.metrics)
    rows = []
    for res in results:
        if list(res.metrics) != keys:
            raise KeyMismatch(
                f"scenario {res.name!r} metrics {list(res.metrics)} != baseline {keys}"
            )
        for key in keys:
            value = res.metrics[key]
            base = baseline.metrics[key]
            diff = value - base
            if base != 0.0:
                pct = 100.0 * diff / abs(base)
            else:
                pct = 0.0 if diff == 0.0 else float("nan")
            rows.append(ComparisonRow(res.name, key, value, base, diff, pct))
    return ComparisonTable(tuple(rows))
