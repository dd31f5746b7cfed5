"""The flagship labor-exploitation model and its behavioral probes.

Six feedback loops drive the model:

B1  Scarcity (balancing): a shrinking pool of potential exploitees raises the
    salary they demand, which depresses the relative attractiveness of the
    standing offer, slows hiring, and preserves the pool.
R2  Growth (reinforcing): a well-capitalized exploiter affords better offers,
    positions look more attractive ex ante, more get filled, more output and
    revenue accrue, and capacity grows further.
B2  Wage drain (balancing): better offers inflate the wage bill, which drains
    the capacity that financed them.
R3  Short-term squeeze (reinforcing): capacity raises the incentive to
    exploit, loads rise, output rises immediately, revenue feeds capacity.
B3  Burnout (balancing): loads above the sustainable level accumulate
    exhaustion with a long time constant, eventually cutting output.
B4  Word of mouth (balancing): overloads and eroding pay make the experienced
    (ex-post) value of positions sag; after a perception delay this feeds
    back into the anticipated (ex-ante) value and hinders the filling of
    vacancies.

Hiring is the smaller of open vacancies and the willing share of the pool,
where willingness comes from a cumulative acceptance curve evaluated at the
ex-ante value: an optimism multiplier times the offered/demanded salary
ratio, tempered by word of mouth.
"""

from __future__ import annotations

import dataclasses
import weakref
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    RunConfig,
    Trajectory,
    evaluate_point,
    simulate,
    steady_state as engine_steady_state,
)
from .errors import CalibrationError, ConfigError, PatternViolation
from .expr import CLIP, LOOKUP, MAX, MIN, PULSE, SMOOTH, Constant, VarRef
from .loops import NamedLoop, Polarity
from .model import AuxDef, ModelSpec, ParamDef, StockDef, validate_model
from .willingness import CurveSpec, NormalCurveSpec

#: Default acceptance curve anchors: half accept at parity, 90% at 1.5x.
DEFAULT_CURVE = NormalCurveSpec(1.0, 1.5)


@dataclass(frozen=True)
class Calibration:
    """Every number the flagship model needs, with tested defaults.

    The defaults produce a viable exploitation economy: revenue per filled
    position exceeds the going wage, so capacity, workload, exhaustion and
    salaries settle into an interior steady state where all six loops have
    something to do. They are artifact defaults, sanity-checked by the loop
    probes, not empirical estimates.
    """

    pool_init: float = 10_000.0  # people initially susceptible
    pool_ref: float = 10_000.0  # pool size at which demanded salary equals w_ref
    w_ref: float = 1.0  # reference demanded salary (money/person/time)
    epsilon: float = 0.5  # scarcity elasticity of the demanded salary
    curve: CurveSpec = DEFAULT_CURVE  # willingness-to-accept curve
    hire_time: float = 4.0  # time to fill an accepted position
    quit_base: float = 0.02  # baseline quit rate (1/time)
    quit_slope: float = 0.1  # extra quit rate per unit exhaustion (1/time)
    t_wage: float = 6.0  # offered-salary adjustment delay
    revenue_share: float = 0.3  # share of revenue retained as capacity
    price: float = 5.0  # money per outcome
    p0: float = 1.0  # outcomes per person per time at sustainable load
    load_exponent_short: float = 0.3  # short-term output elasticity of load
    l_sustainable: float = 1.0  # load workers sustain without exhausting
    t_burnout: float = 40.0  # exhaustion build-up time constant
    t_recover: float = 100.0  # exhaustion recovery time constant
    t_wom: float = 20.0  # word-of-mouth perception delay
    optimism: float = 1.2  # ex-ante overestimation multiplier (>= 1)
    k_init: float = 5_000.0  # starting capacity (money); also k_ref
    desired_workforce_ref: float = 2_000.0  # workforce wanted at unit incentive
    v_ref: float = 1.2  # ex-post value felt as fully satisfactory
    target_premium: float = 1.05  # offered-salary target over the demanded salary
    closed_population: bool = True  # quits return to the pool when set

    def __post_init__(self):
        times = {
            "hire_time": self.hire_time,
            "t_wage": self.t_wage,
            "t_burnout": self.t_burnout,
            "t_recover": self.t_recover,
            "t_wom": self.t_wom,
        }
        for name, value in times.items():
            if not value > 0:
                raise CalibrationError(f"{name} must be positive, got {value}")
        if not 0.0 <= self.revenue_share <= 1.0:
            raise CalibrationError(f"revenue_share must lie in [0, 1], got {self.revenue_share}")
        if not self.pool_ref > 0:
            raise CalibrationError(f"pool_ref must be positive, got {self.pool_ref}")
        if self.pool_init < 0 or self.epsilon < 0:
            raise CalibrationError("pool_init and epsilon must be nonnegative")
        if self.optimism < 1.0:
            raise CalibrationError(f"optimism must be at least 1, got {self.optimism}")
        if not self.load_exponent_short > 0:
            raise CalibrationError("load_exponent_short must be positive")


CURVE_ID = "acceptance"


def build_exploitation_model(cal: Calibration = Calibration()) -> ModelSpec:
    """Wire the six-loop model as a validated stock-flow spec."""
    P = VarRef("potential_exploitees")
    E = VarRef("exploitees")
    K = VarRef("capacity")
    X = VarRef("exhaustion")
    w_off = VarRef("offered_salary")

    params = [
        ("pool_init", cal.pool_init, "people"),
        ("e_init", 0.0, "people"),
        ("x_init", 0.0, "1"),
        ("w_init", cal.w_ref, "money/person/time"),
        ("pool_ref", cal.pool_ref, "people"),
        ("w_ref", cal.w_ref, "money/person/time"),
        ("epsilon", cal.epsilon, "1"),
        ("p_floor", 1.0, "people"),
        ("hire_time", cal.hire_time, "time"),
        ("quit_base", cal.quit_base, "1/time"),
        ("quit_slope", cal.quit_slope, "1/time"),
        ("t_wage", cal.t_wage, "time"),
        ("revenue_share", cal.revenue_share, "1"),
        ("price", cal.price, "money/outcome"),
        ("p0", cal.p0, "outcomes/person/time"),
        ("load_exponent_short", cal.load_exponent_short, "1"),
        ("l_sustainable", cal.l_sustainable, "1"),
        ("t_burnout", cal.t_burnout, "time"),
        ("t_recover", cal.t_recover, "time"),
        ("t_wom", cal.t_wom, "time"),
        ("optimism", cal.optimism, "1"),
        ("k_init", cal.k_init, "money"),
        ("k_ref", cal.k_init, "money"),
        ("desired_workforce_ref", cal.desired_workforce_ref, "people"),
        ("v_ref", cal.v_ref, "1"),
        ("target_premium", cal.target_premium, "1"),
        ("incentive_boost", 1.0, "1"),
    ]
    p = {name: VarRef(name) for name, _, _ in params}

    demanded = VarRef("demanded_salary")
    load = VarRef("load")
    incentive = VarRef("incentive_multiplier")

    auxes = [
        AuxDef(
            "demanded_salary",
            p["w_ref"] * (p["pool_ref"] / MAX(P, p["p_floor"])) ** p["epsilon"],
            "money/person/time",
        ),
        AuxDef("relative_attractiveness", w_off / demanded, "1"),
        AuxDef(
            "incentive_multiplier",
            p["incentive_boost"] * (MAX(K, 0) / p["k_ref"]) ** 0.5,
            "1",
        ),
        AuxDef("load", incentive, "1"),
        AuxDef(
            "ex_post_value",
            SMOOTH(
                (w_off / p["w_ref"])
                * (1 - 0.5 * X)
                * (p["l_sustainable"] / MAX(load, 0.1)),
                p["t_wom"],
            ),
            "1",
        ),
        AuxDef(
            "ex_ante_value",
            p["optimism"]
            * VarRef("relative_attractiveness")
            * CLIP(VarRef("ex_post_value") / p["v_ref"], 0.2, 1.0),
            "1",
        ),
        AuxDef("willing_fraction", LOOKUP(CURVE_ID, VarRef("ex_ante_value")), "1"),
        AuxDef("desired_workforce", p["desired_workforce_ref"] * incentive, "people"),
        AuxDef("vacancies", MAX(VarRef("desired_workforce") - E, 0), "people"),
        AuxDef(
            "hiring",
            MIN(VarRef("vacancies"), VarRef("willing_fraction") * P) / p["hire_time"],
            "people/time",
        ),
        AuxDef("quits", E * (p["quit_base"] + p["quit_slope"] * X), "people/time"),
        AuxDef(
            "outcomes",
            E * p["p0"] * load ** p["load_exponent_short"] * MAX(1 - X, 0),
            "outcomes/time",
        ),
        AuxDef("revenue", VarRef("outcomes") * p["price"], "money/time"),
        AuxDef("wage_bill", E * w_off, "money/time"),
        AuxDef(
            "indicated_salary",
            demanded * p["target_premium"] * CLIP(K / p["k_ref"], 0.5, 1.5),
            "money/person/time",
        ),
    ]

    stocks = [
        StockDef(
            "potential_exploitees",
            initial=p["pool_init"],
            inflow=VarRef("quits") if cal.closed_population else Constant(0.0),
            outflow=VarRef("hiring"),
            unit="people",
        ),
        StockDef(
            "exploitees",
            initial=p["e_init"],
            inflow=VarRef("hiring"),
            outflow=VarRef("quits"),
            unit="people",
        ),
        StockDef(
            "capacity",
            initial=p["k_init"],
            inflow=p["revenue_share"] * VarRef("revenue"),
            outflow=VarRef("wage_bill"),
            unit="money",
        ),
        StockDef(
            "exhaustion",
            initial=p["x_init"],
            inflow=MAX(load - p["l_sustainable"], 0) / p["t_burnout"],
            outflow=X / p["t_recover"],
            unit="1",
        ),
        StockDef(
            "offered_salary",
            initial=p["w_init"],
            inflow=(VarRef("indicated_salary") - w_off) / p["t_wage"],
            outflow=Constant(0.0),
            unit="money/person/time",
        ),
    ]

    spec = ModelSpec(
        name="exploitation",
        stocks=tuple(stocks),
        auxiliaries=tuple(auxes),
        parameters=tuple(ParamDef(name, value, unit) for name, value, unit in params),
        lookups={CURVE_ID: cal.curve},
    )
    report = validate_model(spec)
    if not report.ok:
        details = "; ".join(f"{f.location}: {f.message}" for f in report.errors)
        raise CalibrationError(f"inconsistent calibration: {details}")
    return spec


def fig2_loops() -> tuple[NamedLoop, ...]:
    """The six loops the model must contain, with witness nodes and polarities."""
    B, R = Polarity.BALANCING, Polarity.REINFORCING
    return (
        NamedLoop("B1", B, ("potential_exploitees", "demanded_salary", "relative_attractiveness", "hiring")),
        NamedLoop("R2", R, ("capacity", "offered_salary", "ex_ante_value", "outcomes", "revenue")),
        NamedLoop("B2", B, ("capacity", "offered_salary", "wage_bill")),
        NamedLoop("R3", R, ("capacity", "incentive_multiplier", "load", "outcomes")),
        NamedLoop("B3", B, ("load", "exhaustion", "outcomes")),
        NamedLoop("B4", B, ("load", "ex_post_value", "ex_ante_value", "hiring")),
    )


def reference_operating_point(spec: ModelSpec) -> dict[str, float]:
    """An interior state where every mechanism is active, for loop extraction.

    The run's initial state is useless for this purpose: with nobody yet
    exploited, output is zero and several piecewise constructs sit exactly on
    their kinks, so whole loops are structurally dormant. This point puts the
    workforce, capacity and exhaustion strictly inside every CLIP/MIN/MAX
    branch the six loops travel: capacity above its reference (burnout
    active), exhaustion partial, the pool depleted enough that hiring is
    limited by willingness rather than by vacancies.
    """
    values = spec.param_values()
    stocks = {
        "potential_exploitees": values["pool_ref"] / 5.0,
        "exploitees": values["desired_workforce_ref"] / 4.0,
        "capacity": 1.25 * values["k_ref"],
        "exhaustion": 0.3,
        "offered_salary": values["w_ref"],
    }
    return evaluate_point(spec, stocks)


PROBES = ("B1_scarcity", "R2_growth", "B2_drain", "R3_shortterm", "B3_burnout", "B4_wom")

_STEP_TIME = 10.0
_SETTLE_CACHE: dict[int, tuple] = {}


@dataclass(frozen=True)
class PatternReport:
    """Outcome of a loop probe: which signature held, with diagnostic times."""

    probe: str
    passed: bool
    details: dict[str, float] = field(default_factory=dict)


def settled_overrides(spec: ModelSpec, dt: float = 0.125) -> dict[str, float]:
    """Initial-value overrides that start a run at the model's settled state.

    Probes perturb the settled economy rather than the empty starting one, so
    their signatures are not confounded by the start-up transient (workforce
    ramp-up, capacity overshoot) that any cold start produces.
    """
    key = id(spec)
    hit = _SETTLE_CACHE.get(key)
    if hit is not None and hit[0]() is spec:
        return dict(hit[1])
    steady = engine_steady_state(spec, RunConfig(t_end=2000.0, dt=dt, save_every=8))
    overrides = {
        "pool_init": steady["potential_exploitees"],
        "e_init": steady["exploitees"],
        "k_init": steady["capacity"],
        "x_init": steady["exhaustion"],
        "w_init": steady["offered_salary"],
    }
    _SETTLE_CACHE[key] = (weakref.ref(spec), dict(overrides))
    return overrides


def _probe_cfg(t_end: float, dt: float, **kw) -> RunConfig:
    return RunConfig(t_end=t_end, dt=dt, **kw)


def _pulse_pool_shock(spec: ModelSpec, rate: float, start: float, width: float) -> ModelSpec:
    """Variant spec whose pool stock drains at ``rate`` over [start, start+width)."""
    out = []
    for s in spec.stocks:
        if s.id == "potential_exploitees":
            s = dataclasses.replace(s, outflow=s.outflow + PULSE(rate, start, width))
        out.append(s)
    return dataclasses.replace(spec, stocks=tuple(out))


def _first_time(traj: Trajectory, mask: np.ndarray) -> float | None:
    idx = np.nonzero(mask)[0]
    return float(traj.times[idx[0]]) if len(idx) else None


def loop_probe(spec: ModelSpec, probe: str, dt: float = 0.125) -> PatternReport:
    """Run baseline and perturbed simulations; assert one loop's signature.

    Raises :class:`PatternViolation` with the first failing time when the
    signature does not hold.
    """
    if probe not in PROBES:
        raise ConfigError(f"unknown probe {probe!r}; expected one of {', '.join(PROBES)}")
    return _PROBE_IMPLS[probe](spec, dt)


def _fail(probe: str, time: float, message: str):
    raise PatternViolation(f"{probe}: {message}", probe=probe, time=time)


def _probe_b1(spec: ModelSpec, dt: float) -> PatternReport:
    # a 20% pool reduction at t=10 must lift the demanded salary within 5 time units
    warm = settled_overrides(spec, dt)
    cfg = _probe_cfg(40.0, dt, overrides=warm)
    rate = 0.2 * warm["pool_init"] / 1.0
    base = simulate(spec, cfg)
    shocked = simulate(_pulse_pool_shock(spec, rate, _STEP_TIME, 1.0), cfg)
    deadline = _STEP_TIME + 5.0
    window = (base.times > _STEP_TIME) & (base.times <= deadline)
    rose = window & (shocked["demanded_salary"] > base["demanded_salary"])
    t_rise = _first_time(base, rose)
    if t_rise is None:
        _fail("B1_scarcity", deadline, "demanded salary never rose above baseline")
    return PatternReport("B1_scarcity", True, {"t_rise": t_rise})


def _probe_r2(spec: ModelSpec, dt: float) -> PatternReport:
    # +10% revenue share: capacity, incentives and offered salary all rise
    # above baseline and hold there together for at least 20 time units
    cfg = _probe_cfg(100.0, dt, overrides=settled_overrides(spec, dt))
    rs = spec.param_values()["revenue_share"]
    boosted = dataclasses.replace(cfg, events=((_STEP_TIME, "revenue_share", 1.1 * rs),))
    base = simulate(spec, cfg)
    pert = simulate(spec, boosted)
    above = base.times > _STEP_TIME
    for var in ("capacity", "incentive_multiplier", "offered_salary"):
        above = above & (pert[var] > base[var])
    t_all = _first_time(base, above)
    if t_all is None:
        _fail("R2_growth", cfg.t_end, "capacity, incentives and offered salary never all rose")
    t_hold = _sustained_from(base.times, above, 20.0)
    if t_hold is None:
        _fail("R2_growth", cfg.t_end, "growth signature never held for 20 time units")
    return PatternReport("R2_growth", True, {"t_rise": t_all, "t_hold": t_hold})


def _sustained_from(times: np.ndarray, mask: np.ndarray, span: float) -> float | None:
    """Earliest time from which ``mask`` stays true for at least ``span``."""
    start = None
    for i in range(len(times)):
        if mask[i]:
            if start is None:
                start = i
            if times[i] - times[start] >= span:
                return float(times[start])
        else:
            start = None
    return None


def _probe_b2(spec: ModelSpec, dt: float) -> PatternReport:
    # with no revenue retained, the wage bill is the only flow on capacity:
    # the stock must never increase
    cfg = _probe_cfg(100.0, dt, overrides={"revenue_share": 0.0})
    traj = simulate(spec, cfg)
    k = traj["capacity"]
    growth = np.diff(k) - 1e-12 * np.maximum(1.0, np.abs(k[:-1]))
    bad = np.nonzero(growth > 0)[0]
    if len(bad):
        _fail("B2_drain", float(traj.times[bad[0] + 1]), "capacity increased")
    return PatternReport("B2_drain", True, {"drained": float(k[0] - k[-1])})


def _incentive_step(spec: ModelSpec, cfg: RunConfig) -> RunConfig:
    boost = spec.param_values()["incentive_boost"]
    return dataclasses.replace(cfg, events=((_STEP_TIME, "incentive_boost", 1.2 * boost),))


def _probe_r3(spec: ModelSpec, dt: float) -> PatternReport:
    # +20% incentives: outcomes exceed baseline within 5 time units
    cfg = _probe_cfg(40.0, dt, overrides=settled_overrides(spec, dt))
    base = simulate(spec, cfg)
    pert = simulate(spec, _incentive_step(spec, cfg))
    deadline = _STEP_TIME + 5.0
    window = (base.times > _STEP_TIME) & (base.times <= deadline)
    rose = window & (pert["outcomes"] > base["outcomes"])
    t_rise = _first_time(base, rose)
    if t_rise is None:
        _fail("R3_shortterm", deadline, "outcomes never exceeded baseline")
    return PatternReport("R3_shortterm", True, {"t_rise": t_rise})


def _probe_b3(spec: ModelSpec, dt: float) -> PatternReport:
    # same step, long horizon: outcomes overshoot, then settle at least 5%
    # below their own peak as exhaustion accumulates
    cfg = _probe_cfg(400.0, dt, overrides=settled_overrides(spec, dt))
    base = simulate(spec, cfg)
    pert = simulate(spec, _incentive_step(spec, cfg))
    after = base.times > _STEP_TIME
    rose = after & (base.times <= _STEP_TIME + 5.0) & (pert["outcomes"] > base["outcomes"])
    t_rise = _first_time(base, rose)
    if t_rise is None:
        _fail("B3_burnout", _STEP_TIME + 5.0, "outcomes never exceeded baseline")
    series = pert["outcomes"]
    peak_idx = int(np.argmax(np.where(after, series, -np.inf)))
    peak = float(series[peak_idx])
    final = float(series[-1])
    if not final <= 0.95 * peak:
        _fail("B3_burnout", float(base.times[-1]), "outcomes did not settle at least 5% below their peak")
    dip = np.nonzero(series[peak_idx:] <= 0.95 * peak)[0]
    t_dip = float(base.times[peak_idx + dip[0]])
    return PatternReport(
        "B3_burnout",
        True,
        {"t_rise": t_rise, "t_peak": float(base.times[peak_idx]), "t_dip": t_dip, "decline": 1.0 - final / peak},
    )


def _probe_b4(spec: ModelSpec, dt: float) -> PatternReport:
    # same step: the experienced value of positions sags below baseline once
    # the perception delay has worked through, and hiring dips below baseline
    # at some later time
    cfg = _probe_cfg(250.0, dt, overrides=settled_overrides(spec, dt))
    base = simulate(spec, cfg)
    pert = simulate(spec, _incentive_step(spec, cfg))
    after = base.times > _STEP_TIME
    value_below = after & (pert["ex_post_value"] < base["ex_post_value"])
    t_value = _first_time(base, value_below)
    if t_value is None:
        _fail("B4_wom", float(base.times[-1]), "ex-post value never fell below baseline")
    hiring_below = (base.times >= t_value) & (pert["hiring"] < base["hiring"])
    t_hiring = _first_time(base, hiring_below)
    if t_hiring is None:
        _fail("B4_wom", float(base.times[-1]), "hiring never fell below baseline afterwards")
    return PatternReport("B4_wom", True, {"t_value": t_value, "t_hiring": t_hiring})


_PROBE_IMPLS = {
    "B1_scarcity": _probe_b1,
    "R2_growth": _probe_r2,
    "B2_drain": _probe_b2,
    "R3_shortterm": _probe_r3,
    "B3_burnout": _probe_b3,
    "B4_wom": _probe_b4,
}
